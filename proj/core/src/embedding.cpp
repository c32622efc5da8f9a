#include "capq/embedding.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "capq/binio.hpp"
#include "capq/error.hpp"
#include "capq/rng.hpp"

namespace capq {

namespace {

constexpr std::uint8_t kEvecVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kPcamVersion = 1;

void check_finite(const std::vector<float>& data, std::size_t dim, const std::string& what) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw_data(what + ": non-finite value at row " + std::to_string(i / dim) +
                       " component " + std::to_string(i % dim));
        }
    }
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::size_t dim, std::vector<float> data,
                           std::optional<std::vector<std::uint32_t>> labels)
    : dim_(dim), data_(std::move(data)), labels_(std::move(labels)) {
    if (dim_ == 0) throw_param("EmbeddingSet: dim must be positive");
    if (data_.size() % dim_ != 0) {
        throw_param("EmbeddingSet: data size " + std::to_string(data_.size()) +
                    " is not a multiple of dim " + std::to_string(dim_));
    }
    count_ = data_.size() / dim_;
    check_finite(data_, dim_, "EmbeddingSet");
    if (labels_ && labels_->size() != count_) {
        throw_param("EmbeddingSet: " + std::to_string(labels_->size()) + " labels for " +
                    std::to_string(count_) + " vectors");
    }
}

std::span<const float> EmbeddingSet::vec(std::size_t i) const {
    if (i >= count_) throw_param("EmbeddingSet::vec: index " + std::to_string(i) + " out of range");
    return {data_.data() + i * dim_, dim_};
}

const std::vector<std::uint32_t>& EmbeddingSet::labels() const {
    if (!labels_) throw_state("EmbeddingSet: no labels present");
    return *labels_;
}

std::uint32_t EmbeddingSet::label(std::size_t i) const {
    if (i >= count_) throw_param("EmbeddingSet::label: index out of range");
    return labels()[i];
}

EmbeddingSet load_evec(const std::filesystem::path& path) {
    auto raw = load_file(path);
    ByteReader r(raw, path.string());
    r.expect_magic("EVEC");
    if (std::uint8_t v = r.u8(); v != kEvecVersion) {
        r.fail("unsupported version " + std::to_string(v));
    }
    if (std::uint8_t dt = r.u8(); dt != kDtypeF32) {
        r.fail("unsupported dtype " + std::to_string(dt));
    }
    for (int i = 0; i < 3; ++i) {
        if (r.u8() != 0) r.fail("nonzero reserved byte");
    }
    std::uint32_t count = r.u32();
    std::uint32_t dim = r.u32();
    if (dim == 0) r.fail("dim must be positive");

    std::vector<float> data(static_cast<std::size_t>(count) * dim);
    r.f32_array(data);
    check_finite(data, dim, path.string());

    std::optional<std::vector<std::uint32_t>> labels;
    if (!r.at_end()) {
        r.expect_magic("LBLS");
        std::uint32_t lcount = r.u32();
        if (lcount != count) {
            r.fail("label count " + std::to_string(lcount) + " does not match vector count " +
                   std::to_string(count));
        }
        labels.emplace(lcount);
        r.u32_array(*labels);
    }
    r.expect_end();
    return EmbeddingSet(dim, std::move(data), std::move(labels));
}

void write_evec(const EmbeddingSet& set, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic("EVEC");
    w.u8(kEvecVersion);
    w.u8(kDtypeF32);
    for (int i = 0; i < 3; ++i) w.u8(0);
    w.u32(static_cast<std::uint32_t>(set.count()));
    w.u32(static_cast<std::uint32_t>(set.dim()));
    w.f32_array(set.data());
    if (set.has_labels()) {
        w.magic("LBLS");
        w.u32(static_cast<std::uint32_t>(set.count()));
        w.u32_array(set.labels());
    }
    w.save(path);
}

namespace {

// Unit-normalizes in place; the caller guarantees a nonzero vector.
void normalize_span(std::span<double> v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) x *= inv;
}

}  // namespace

EmbeddingSet gen_synthetic(const SyntheticSpec& spec) {
    if (spec.n_identities == 0) throw_param("gen_synthetic: n_identities must be positive");
    if (spec.samples_per_identity == 0) {
        throw_param("gen_synthetic: samples_per_identity must be positive");
    }
    if (spec.dim < 2) throw_param("gen_synthetic: dim must be at least 2");
    if (!(spec.intra_class_noise >= 0.0f)) {
        throw_param("gen_synthetic: intra_class_noise must be non-negative");
    }

    Rng centers_rng = Rng::derive(spec.seed, 0, "synthetic-centers");
    Rng noise_rng = Rng::derive(spec.seed, 0, "synthetic-noise");

    const std::size_t dim = spec.dim;
    const std::size_t total = std::size_t(spec.n_identities) * spec.samples_per_identity;
    std::vector<float> data(total * dim);
    std::vector<std::uint32_t> labels(total);
    std::vector<double> center(dim), sample(dim);

    std::size_t row = 0;
    for (std::uint32_t id = 0; id < spec.n_identities; ++id) {
        for (std::size_t t = 0; t < dim; ++t) center[t] = centers_rng.gaussian();
        normalize_span(center);
        for (std::uint32_t s = 0; s < spec.samples_per_identity; ++s, ++row) {
            for (std::size_t t = 0; t < dim; ++t) {
                sample[t] = center[t] + double(spec.intra_class_noise) * noise_rng.gaussian();
            }
            normalize_span(sample);
            for (std::size_t t = 0; t < dim; ++t) {
                data[row * dim + t] = static_cast<float>(sample[t]);
            }
            labels[row] = id;
        }
    }
    return EmbeddingSet(dim, std::move(data), std::move(labels));
}

PcaModel fit_pca(const EmbeddingSet& set, std::size_t target_dim) {
    const std::size_t n = set.count();
    const std::size_t d = set.dim();
    if (target_dim == 0 || target_dim > d || target_dim > n) {
        throw_param("fit_pca: target_dim " + std::to_string(target_dim) +
                    " must satisfy 1 <= target_dim <= min(count " + std::to_string(n) + ", dim " +
                    std::to_string(d) + ")");
    }

    using MatrixRf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const MatrixRf> x(set.data().data(), static_cast<Eigen::Index>(n),
                                 static_cast<Eigen::Index>(d));
    Eigen::MatrixXd xd = x.cast<double>();
    Eigen::RowVectorXd mean = xd.colwise().mean();
    xd.rowwise() -= mean;
    Eigen::MatrixXd cov = (xd.transpose() * xd) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw_data("fit_pca: eigendecomposition failed");
    // Eigen returns eigenvalues in increasing order; take the top target_dim.
    PcaModel model;
    model.input_dim = static_cast<std::uint32_t>(d);
    model.output_dim = static_cast<std::uint32_t>(target_dim);
    model.mean.resize(d);
    for (std::size_t t = 0; t < d; ++t) model.mean[t] = static_cast<float>(mean(t));
    model.components.resize(target_dim * d);
    model.explained_variance.resize(target_dim);
    for (std::size_t r = 0; r < target_dim; ++r) {
        Eigen::Index src = static_cast<Eigen::Index>(d - 1 - r);
        Eigen::VectorXd v = es.eigenvectors().col(src);
        // Fix the sign so the component of largest magnitude is positive,
        // lowest index winning ties; keeps the fit deterministic.
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index t = 0; t < v.size(); ++t) {
            if (std::abs(v(t)) > best) {
                best = std::abs(v(t));
                pivot = t;
            }
        }
        if (v(pivot) < 0.0) v = -v;
        for (std::size_t t = 0; t < d; ++t) {
            model.components[r * d + t] = static_cast<float>(v(static_cast<Eigen::Index>(t)));
        }
        model.explained_variance[r] = static_cast<float>(std::max(0.0, es.eigenvalues()(src)));
    }
    return model;
}

EmbeddingSet apply_pca(const PcaModel& model, const EmbeddingSet& set) {
    if (set.dim() != model.input_dim) {
        throw_param("apply_pca: set dim " + std::to_string(set.dim()) +
                    " does not match model input_dim " + std::to_string(model.input_dim));
    }
    const std::size_t n = set.count();
    const std::size_t d = model.input_dim;
    const std::size_t k = model.output_dim;

    Eigen::MatrixXd w(k, d);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t t = 0; t < d; ++t) w(r, t) = model.components[r * d + t];
    }
    Eigen::VectorXd mean(d);
    for (std::size_t t = 0; t < d; ++t) mean(t) = model.mean[t];

    std::vector<float> out(n * k);
    Eigen::VectorXd xv(d);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = set.vec(i);
        for (std::size_t t = 0; t < d; ++t) xv(t) = row[t];
        Eigen::VectorXd y = w * (xv - mean);
        for (std::size_t r = 0; r < k; ++r) out[i * k + r] = static_cast<float>(y(r));
    }
    std::optional<std::vector<std::uint32_t>> labels;
    if (set.has_labels()) labels = set.labels();
    return EmbeddingSet(k, std::move(out), std::move(labels));
}

EmbeddingSet l2_normalize(const EmbeddingSet& set) {
    const std::size_t n = set.count();
    const std::size_t d = set.dim();
    std::vector<float> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = set.vec(i);
        double ss = 0.0;
        for (float x : row) ss += double(x) * double(x);
        if (ss == 0.0) throw_data("l2_normalize: zero vector at row " + std::to_string(i));
        double inv = 1.0 / std::sqrt(ss);
        for (std::size_t t = 0; t < d; ++t) {
            out[i * d + t] = static_cast<float>(double(row[t]) * inv);
        }
    }
    std::optional<std::vector<std::uint32_t>> labels;
    if (set.has_labels()) labels = set.labels();
    return EmbeddingSet(d, std::move(out), std::move(labels));
}

PcaModel load_pca(const std::filesystem::path& path) {
    auto raw = load_file(path);
    ByteReader r(raw, path.string());
    r.expect_magic("PCAM");
    if (std::uint8_t v = r.u8(); v != kPcamVersion) {
        r.fail("unsupported version " + std::to_string(v));
    }
    if (std::uint8_t dt = r.u8(); dt != kDtypeF32) {
        r.fail("unsupported dtype " + std::to_string(dt));
    }
    for (int i = 0; i < 3; ++i) {
        if (r.u8() != 0) r.fail("nonzero reserved byte");
    }
    PcaModel m;
    m.input_dim = r.u32();
    m.output_dim = r.u32();
    if (m.input_dim == 0 || m.output_dim == 0 || m.output_dim > m.input_dim) {
        r.fail("invalid dims " + std::to_string(m.input_dim) + " -> " +
               std::to_string(m.output_dim));
    }
    m.mean.resize(m.input_dim);
    r.f32_array(m.mean);
    m.components.resize(std::size_t(m.output_dim) * m.input_dim);
    r.f32_array(m.components);
    m.explained_variance.resize(m.output_dim);
    r.f32_array(m.explained_variance);
    r.expect_end();
    check_finite(m.mean, m.input_dim, path.string());
    check_finite(m.components, m.input_dim, path.string());
    return m;
}

void write_pca(const PcaModel& model, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic("PCAM");
    w.u8(kPcamVersion);
    w.u8(kDtypeF32);
    for (int i = 0; i < 3; ++i) w.u8(0);
    w.u32(model.input_dim);
    w.u32(model.output_dim);
    w.f32_array(model.mean);
    w.f32_array(model.components);
    w.f32_array(model.explained_variance);
    w.save(path);
}

}  // namespace capq
