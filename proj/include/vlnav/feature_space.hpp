#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vlnav/camera.hpp"

namespace vlnav {

// Synthetic joint embedding space: one unit vector per semantic class, shared
// by the pixel encoder and the text encoder so grounding is exactly testable.
// Entries are near-orthogonal (pairwise |cos| <= max_cos) and deterministic
// for a given seed. A reserved unit vector backs the "other" label.
class Codebook {
public:
    static constexpr double kMaxPairwiseCos = 0.2;

    // Rejection-samples unit vectors until the near-orthogonality bound
    // holds; throws ValidationError when dim is too small for the class
    // count (sampler exhausts its attempt budget).
    static Codebook build(const std::vector<std::string>& class_names, int dim,
                          std::uint64_t seed);

    int dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }
    bool contains(const std::string& name) const { return entries_.count(name) > 0; }
    // Throws ValidationError for unknown names.
    const std::vector<double>& vec(const std::string& name) const;
    const std::vector<double>& other_vector() const { return other_; }
    const std::map<std::string, std::vector<double>>& entries() const {
        return entries_;
    }

    // Deterministic unit vector for labels outside the codebook, so
    // open-vocabulary queries stay well-defined.
    std::vector<double> hashed_vector(const std::string& label) const;

private:
    int dim_{0};
    std::uint64_t seed_{0};
    std::map<std::string, std::vector<double>> entries_;
    std::vector<double> other_;
};

// Dense per-pixel features; present exactly where the observation has a
// valid depth/class. Row-major, dim doubles per pixel.
struct FeatureImage {
    int width{0};
    int height{0};
    int dim{0};
    std::vector<double> data;
    std::vector<std::uint8_t> valid;

    std::span<const double> at(int i, int j) const {
        return {data.data() + (static_cast<std::size_t>(j) * width + i) * dim,
                static_cast<std::size_t>(dim)};
    }
    bool has(int i, int j) const { return valid[j * width + i] != 0; }
};

// Column-major C x (K+1) text embedding matrix; the last column is always
// the "other" vector.
struct TextEmbeddingMatrix {
    int dim{0};
    int cols{0};
    std::vector<double> data;
    std::vector<std::string> labels;

    std::span<const double> col(int c) const {
        return {data.data() + static_cast<std::size_t>(c) * dim,
                static_cast<std::size_t>(dim)};
    }
};

// feature = normalize(codebook[class] + noise) per valid pixel, where the
// noise is an isotropic Gaussian whose total norm scales with noise_sigma;
// sigma = 0 reproduces codebook vectors exactly. class_table binds the
// observation's class ids to codebook names; floor/wall sentinels resolve to
// the "floor"/"wall" entries. Throws ValidationError on unknown class ids.
FeatureImage encode_pixels(const Observation& obs,
                           const std::vector<std::string>& class_table,
                           const Codebook& codebook, double noise_sigma,
                           std::uint64_t seed);

// Column i = codebook[labels[i]]; "other" maps to the reserved vector and
// unknown labels to their hashed vectors. Requires a nonempty list ending in
// "other".
TextEmbeddingMatrix encode_text(const std::vector<std::string>& labels,
                                const Codebook& codebook);

// Encoder seams the mapping and localization stages depend on; a real
// image/text embedding backend replaces the codebook by implementing these.
class PixelEncoder {
public:
    virtual ~PixelEncoder() = default;
    virtual int dim() const = 0;
    virtual FeatureImage encode_observation(const Observation& obs,
                                            std::uint64_t seed) const = 0;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual int dim() const = 0;
    virtual TextEmbeddingMatrix encode_labels(
        const std::vector<std::string>& labels) const = 0;
};

// Default backend: both encoders drawn from one codebook, so pixel features
// and text embeddings live in the same space by construction.
class CodebookEncoder : public PixelEncoder, public TextEncoder {
public:
    CodebookEncoder(Codebook codebook, std::vector<std::string> class_table,
                    double noise_sigma = 0.0)
        : codebook_(std::move(codebook)),
          class_table_(std::move(class_table)),
          noise_sigma_(noise_sigma) {}

    int dim() const override { return codebook_.dim(); }
    FeatureImage encode_observation(const Observation& obs,
                                    std::uint64_t seed) const override {
        return encode_pixels(obs, class_table_, codebook_, noise_sigma_, seed);
    }
    TextEmbeddingMatrix encode_labels(
        const std::vector<std::string>& labels) const override {
        return encode_text(labels, codebook_);
    }
    const Codebook& codebook() const { return codebook_; }

private:
    Codebook codebook_;
    std::vector<std::string> class_table_;
    double noise_sigma_{0.0};
};

}  // namespace vlnav
