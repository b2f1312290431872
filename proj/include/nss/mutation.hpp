#pragma once

#include <string>
#include <vector>

#include "nss/dataset.hpp"
#include "nss/rng.hpp"
#include "nss/tensor.hpp"

namespace nss {

enum class MutationKind { Shift, Rotation, Scale, Shear, Contrast, Brightness, Blur };

std::string mutation_kind_name(MutationKind kind);
MutationKind mutation_kind_from_name(const std::string& name);

// One benign transformation with its parameters. Magnitudes live in the
// documented ranges; signs flip direction for shift/rotation/shear.
struct MutationSpec {
    MutationKind kind = MutationKind::Brightness;

    float shift_x = 0.0f;  // fraction of width, [0.05, 0.15]
    float shift_y = 0.0f;  // fraction of height, [0.05, 0.15]
    int sign_x = 1;
    int sign_y = 1;
    float angle = 0.0f;  // degrees; rotation [5, 25], shear [15, 30]
    int sign = 1;
    float ratio = 1.0f;  // scale [0.8, 1.2]
    float gain = 1.0f;   // contrast / brightness [0.5, 1.5]
    int kernel = 0;      // blur {2, 3, 5, 7}

    // Throws ConfigError when a parameter is outside its range.
    void validate() const;

    static MutationSpec shift(float sx, float sy, int sign_x = 1, int sign_y = 1);
    static MutationSpec rotation(float degrees, int sign = 1);
    static MutationSpec scale(float ratio);
    static MutationSpec shear(float degrees, int sign = 1);
    static MutationSpec contrast(float gain);
    static MutationSpec brightness(float gain);
    static MutationSpec blur(int kernel);
};

// "kind:params" syntax for fixed-mutation runs, e.g. "scale:0.8",
// "shift:0.15,0.15", "rotation:-10", "blur:2".
MutationSpec parse_fixed_mutation(const std::string& text);

// Applies `spec` to a [c,h,w] image with pixels in [0,1]. Geometric
// transforms use bilinear sampling about the image center with zero fill;
// output pixels are clamped to [0,1]. Deterministic.
Tensor mutate(const Tensor& image, const MutationSpec& spec);

// Uniform draw: kind over the seven transforms, parameter over its range,
// signs over {-1,+1} where applicable.
MutationSpec sample_spec(Rng& rng);

// The (original, mutated, label) pool selectors consume.
struct CandidatePair {
    int index = 0;
    Tensor original;  // [c,h,w]
    Tensor mutated;
    int label = 0;
    MutationSpec spec;
};

// One pair per dataset element; pair i draws its spec from substream
// (seed, i), so generation parallelizes without changing output.
std::vector<CandidatePair> generate_candidates(const LabeledDataset& dataset, uint64_t seed);

// Same transformation applied to every element (fixed-parameter runs).
std::vector<CandidatePair> generate_candidates_fixed(const LabeledDataset& dataset,
                                                     const MutationSpec& spec);

// Rebuild pairs from a persisted spec log (one spec per element, in order).
std::vector<CandidatePair> candidates_from_specs(const LabeledDataset& dataset,
                                                 const std::vector<MutationSpec>& specs);

// Mutation log: structured text keyed by candidate index; `dataset_ref` is an
// opaque caller string recording which dataset the log belongs to.
void save_mutation_log(const std::string& path, const std::vector<MutationSpec>& specs,
                       const std::string& dataset_ref, uint64_t seed);

struct MutationLog {
    std::vector<MutationSpec> specs;
    std::string dataset_ref;
    uint64_t seed = 0;
};

MutationLog load_mutation_log(const std::string& path);

}  // namespace nss
