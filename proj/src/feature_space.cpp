#include "vlnav/feature_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vlnav/errors.hpp"
#include "vlnav/rng.hpp"

namespace vlnav {
namespace {

std::vector<double> sample_unit(Rng& rng, int dim) {
    std::vector<double> v(dim);
    double n2 = 0.0;
    for (double& x : v) {
        x = rng.gaussian();
        n2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : v) x *= inv;
    return v;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

Codebook Codebook::build(const std::vector<std::string>& class_names, int dim,
                         std::uint64_t seed) {
    if (dim < 8) throw ValidationError("codebook dim must be >= 8");
    std::set<std::string> distinct(class_names.begin(), class_names.end());
    if (distinct.size() != class_names.size()) {
        throw ValidationError("codebook class names must be distinct");
    }

    Codebook cb;
    cb.dim_ = dim;
    cb.seed_ = seed;
    Rng rng(mix_seed(seed, 0x636f6465626f6f6bULL));

    constexpr int kMaxAttemptsPerVector = 20000;
    std::vector<const std::vector<double>*> accepted;
    auto draw = [&](const std::string& what) {
        for (int attempt = 0; attempt < kMaxAttemptsPerVector; ++attempt) {
            std::vector<double> cand = sample_unit(rng, dim);
            bool ok = true;
            for (const auto* prev : accepted) {
                if (std::abs(cosine(cand, *prev)) > kMaxPairwiseCos) {
                    ok = false;
                    break;
                }
            }
            if (ok) return cand;
        }
        throw ValidationError(
            "codebook sampler exhausted attempts for \"" + what +
            "\"; dim " + std::to_string(dim) + " is too small for " +
            std::to_string(distinct.size() + 1) + " near-orthogonal vectors");
    };

    cb.other_ = draw("other");
    accepted.push_back(&cb.other_);
    // std::set iteration is sorted, so the per-class draw order (and the
    // resulting vectors) do not depend on the caller's name order.
    for (const std::string& name : distinct) {
        auto [it, inserted] = cb.entries_.emplace(name, draw(name));
        accepted.push_back(&it->second);
    }
    return cb;
}

const std::vector<double>& Codebook::vec(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw ValidationError("unknown codebook class: " + name);
    }
    return it->second;
}

std::vector<double> Codebook::hashed_vector(const std::string& label) const {
    Rng rng(fnv1a64(label));
    return sample_unit(rng, dim_);
}

FeatureImage encode_pixels(const Observation& obs,
                           const std::vector<std::string>& class_table,
                           const Codebook& codebook, double noise_sigma,
                           std::uint64_t seed) {
    FeatureImage img;
    img.width = obs.width;
    img.height = obs.height;
    img.dim = codebook.dim();
    img.data.assign(static_cast<std::size_t>(obs.width) * obs.height * img.dim,
                    0.0);
    img.valid.assign(static_cast<std::size_t>(obs.width) * obs.height, 0);

    // Resolve each distinct class id once.
    std::map<std::int16_t, const std::vector<double>*> by_id;
    auto base_vec = [&](std::int16_t id) -> const std::vector<double>* {
        auto it = by_id.find(id);
        if (it != by_id.end()) return it->second;
        const std::vector<double>* v = nullptr;
        if (id == kClassFloor) {
            v = &codebook.vec("floor");
        } else if (id == kClassWall) {
            v = &codebook.vec("wall");
        } else if (id >= 0 && id < static_cast<int>(class_table.size())) {
            v = &codebook.vec(class_table[id]);
        } else {
            throw ValidationError("observation class id " + std::to_string(id) +
                                  " has no codebook entry");
        }
        by_id.emplace(id, v);
        return v;
    };

    Rng rng(mix_seed(seed, 0x706978656c73ULL));
    const int dim = img.dim;
    // noise_sigma scales the total perturbation norm, so its meaning does
    // not drift with the feature dimension.
    const double comp_sigma = noise_sigma / std::sqrt(static_cast<double>(dim));
    for (int j = 0; j < obs.height; ++j) {
        for (int i = 0; i < obs.width; ++i) {
            if (!obs.valid(i, j)) continue;
            const std::vector<double>& base = *base_vec(obs.class_at(i, j));
            double* out =
                img.data.data() + (static_cast<std::size_t>(j) * obs.width + i) * dim;
            if (noise_sigma <= 0.0) {
                std::copy(base.begin(), base.end(), out);
            } else {
                double n2 = 0.0;
                for (int k = 0; k < dim; ++k) {
                    const double x = base[k] + comp_sigma * rng.gaussian();
                    out[k] = x;
                    n2 += x * x;
                }
                const double inv = 1.0 / std::sqrt(n2);
                for (int k = 0; k < dim; ++k) out[k] *= inv;
            }
            img.valid[j * obs.width + i] = 1;
        }
    }
    return img;
}

TextEmbeddingMatrix encode_text(const std::vector<std::string>& labels,
                                const Codebook& codebook) {
    if (labels.empty()) throw ValidationError("label list is empty");
    if (labels.back() != "other") {
        throw ValidationError("label list must end with \"other\", got \"" +
                              labels.back() + "\"");
    }
    TextEmbeddingMatrix m;
    m.dim = codebook.dim();
    m.cols = static_cast<int>(labels.size());
    m.labels = labels;
    m.data.resize(static_cast<std::size_t>(m.dim) * m.cols);
    for (int c = 0; c < m.cols; ++c) {
        std::vector<double> col;
        if (labels[c] == "other") {
            col = codebook.other_vector();
        } else if (codebook.contains(labels[c])) {
            col = codebook.vec(labels[c]);
        } else {
            col = codebook.hashed_vector(labels[c]);
        }
        std::copy(col.begin(), col.end(),
                  m.data.begin() + static_cast<std::size_t>(c) * m.dim);
    }
    return m;
}

}  // namespace vlnav
