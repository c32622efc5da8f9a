/** \file
 * Error taxonomy shared by the library and the command line tool.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace capq {

/// Coarse error class, mapped to process exit codes by callers.
enum class errc {
    invalid_parameter,  ///< caller passed an out-of-contract argument
    bad_data,           ///< malformed file, corrupt container, unusable input
    key_mismatch,       ///< wrong key, wrong key id, unauthorized key use
    invalid_state,      ///< operation invoked on an object not ready for it
};

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void throw_param(const std::string& what) {
    throw Error(errc::invalid_parameter, what);
}

[[noreturn]] inline void throw_data(const std::string& what) {
    throw Error(errc::bad_data, what);
}

[[noreturn]] inline void throw_key(const std::string& what) {
    throw Error(errc::key_mismatch, what);
}

[[noreturn]] inline void throw_state(const std::string& what) {
    throw Error(errc::invalid_state, what);
}

}  // namespace capq
