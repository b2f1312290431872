#include "nss/mutation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nss/errors.hpp"
#include "nss/parallel.hpp"

namespace nss {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_range(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("mutation parameter out of range: " + what);
}

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

// Bilinear sample of channel plane `src` (h x w) at float coords, zero
// outside the source.
float bilinear(const float* src, int h, int w, float y, float x) {
    int y0 = static_cast<int>(std::floor(y));
    int x0 = static_cast<int>(std::floor(x));
    float fy = y - static_cast<float>(y0);
    float fx = x - static_cast<float>(x0);
    auto at = [&](int yy, int xx) -> float {
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0f;
        return src[yy * w + xx];
    };
    float top = at(y0, x0) * (1.0f - fx) + at(y0, x0 + 1) * fx;
    float bot = at(y0 + 1, x0) * (1.0f - fx) + at(y0 + 1, x0 + 1) * fx;
    return top * (1.0f - fy) + bot * fy;
}

// Inverse affine resample: for each output pixel, (sy, sx) = A * (y-cy, x-cx)
// + (cy, cx) + t, bilinear at the source point.
Tensor affine_resample(const Tensor& image, float a_yy, float a_yx, float a_xy, float a_xx,
                       float ty, float tx) {
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const float cy = static_cast<float>(h - 1) / 2.0f;
    const float cx = static_cast<float>(w - 1) / 2.0f;
    Tensor out(image.shape());
    for (int ch = 0; ch < c; ++ch) {
        const float* src = image.data() + static_cast<size_t>(ch) * h * w;
        float* dst = out.data() + static_cast<size_t>(ch) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float dy = static_cast<float>(y) - cy;
                float dx = static_cast<float>(x) - cx;
                float sy = a_yy * dy + a_yx * dx + cy + ty;
                float sx = a_xy * dy + a_xx * dx + cx + tx;
                dst[y * w + x] = clamp01(bilinear(src, h, w, sy, sx));
            }
        }
    }
    return out;
}

Tensor box_blur(const Tensor& image, int ks) {
    const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
    const int offset = (ks - 1) / 2;  // even kernels anchor top-left
    const float inv = 1.0f / static_cast<float>(ks * ks);
    Tensor out(image.shape());
    for (int ch = 0; ch < c; ++ch) {
        const float* src = image.data() + static_cast<size_t>(ch) * h * w;
        float* dst = out.data() + static_cast<size_t>(ch) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (int py = 0; py < ks; ++py) {
                    int yy = std::clamp(y - offset + py, 0, h - 1);
                    for (int px = 0; px < ks; ++px) {
                        int xx = std::clamp(x - offset + px, 0, w - 1);
                        acc += src[yy * w + xx];
                    }
                }
                dst[y * w + x] = clamp01(acc * inv);
            }
        }
    }
    return out;
}

void append_float(std::string& s, float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    s += buf;
}

}  // namespace

std::string mutation_kind_name(MutationKind kind) {
    switch (kind) {
        case MutationKind::Shift: return "shift";
        case MutationKind::Rotation: return "rotation";
        case MutationKind::Scale: return "scale";
        case MutationKind::Shear: return "shear";
        case MutationKind::Contrast: return "contrast";
        case MutationKind::Brightness: return "brightness";
        case MutationKind::Blur: return "blur";
    }
    throw ConfigError("unreachable mutation kind");
}

MutationKind mutation_kind_from_name(const std::string& name) {
    if (name == "shift") return MutationKind::Shift;
    if (name == "rotation") return MutationKind::Rotation;
    if (name == "scale") return MutationKind::Scale;
    if (name == "shear") return MutationKind::Shear;
    if (name == "contrast") return MutationKind::Contrast;
    if (name == "brightness") return MutationKind::Brightness;
    if (name == "blur") return MutationKind::Blur;
    throw FormatError("unknown mutation kind '" + name + "'");
}

void MutationSpec::validate() const {
    switch (kind) {
        case MutationKind::Shift:
            check_range(shift_x >= 0.05f && shift_x <= 0.15f, "shift s_x must be in [0.05, 0.15]");
            check_range(shift_y >= 0.05f && shift_y <= 0.15f, "shift s_y must be in [0.05, 0.15]");
            check_range(sign_x == 1 || sign_x == -1, "shift sign_x must be +-1");
            check_range(sign_y == 1 || sign_y == -1, "shift sign_y must be +-1");
            break;
        case MutationKind::Rotation:
            check_range(angle >= 5.0f && angle <= 25.0f, "rotation q must be in [5, 25] degrees");
            check_range(sign == 1 || sign == -1, "rotation sign must be +-1");
            break;
        case MutationKind::Scale:
            check_range(ratio >= 0.8f && ratio <= 1.2f, "scale r must be in [0.8, 1.2]");
            break;
        case MutationKind::Shear:
            check_range(angle >= 15.0f && angle <= 30.0f, "shear s must be in [15, 30] degrees");
            check_range(sign == 1 || sign == -1, "shear sign must be +-1");
            break;
        case MutationKind::Contrast:
            check_range(gain >= 0.5f && gain <= 1.5f, "contrast alpha must be in [0.5, 1.5]");
            break;
        case MutationKind::Brightness:
            check_range(gain >= 0.5f && gain <= 1.5f, "brightness beta must be in [0.5, 1.5]");
            break;
        case MutationKind::Blur:
            check_range(kernel == 2 || kernel == 3 || kernel == 5 || kernel == 7,
                        "blur ks must be one of {2, 3, 5, 7}");
            break;
    }
}

MutationSpec MutationSpec::shift(float sx, float sy, int sign_x, int sign_y) {
    MutationSpec s;
    s.kind = MutationKind::Shift;
    s.shift_x = sx;
    s.shift_y = sy;
    s.sign_x = sign_x;
    s.sign_y = sign_y;
    s.validate();
    return s;
}

MutationSpec MutationSpec::rotation(float degrees, int sign) {
    MutationSpec s;
    s.kind = MutationKind::Rotation;
    s.angle = degrees;
    s.sign = sign;
    s.validate();
    return s;
}

MutationSpec MutationSpec::scale(float ratio) {
    MutationSpec s;
    s.kind = MutationKind::Scale;
    s.ratio = ratio;
    s.validate();
    return s;
}

MutationSpec MutationSpec::shear(float degrees, int sign) {
    MutationSpec s;
    s.kind = MutationKind::Shear;
    s.angle = degrees;
    s.sign = sign;
    s.validate();
    return s;
}

MutationSpec MutationSpec::contrast(float gain) {
    MutationSpec s;
    s.kind = MutationKind::Contrast;
    s.gain = gain;
    s.validate();
    return s;
}

MutationSpec MutationSpec::brightness(float gain) {
    MutationSpec s;
    s.kind = MutationKind::Brightness;
    s.gain = gain;
    s.validate();
    return s;
}

MutationSpec MutationSpec::blur(int kernel) {
    MutationSpec s;
    s.kind = MutationKind::Blur;
    s.kernel = kernel;
    s.validate();
    return s;
}

MutationSpec parse_fixed_mutation(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ConfigError("fixed mutation must look like kind:params, got '" + text + "'");
    }
    std::string kind = text.substr(0, colon);
    std::string rest = text.substr(colon + 1);
    auto parse_f = [&](const std::string& s) {
        try {
            return std::stof(s);
        } catch (const std::exception&) {
            throw ConfigError("bad mutation parameter '" + s + "'");
        }
    };
    if (kind == "shift") {
        auto comma = rest.find(',');
        if (comma == std::string::npos) throw ConfigError("shift needs sx,sy");
        float sx = parse_f(rest.substr(0, comma));
        float sy = parse_f(rest.substr(comma + 1));
        return MutationSpec::shift(std::fabs(sx), std::fabs(sy), sx < 0 ? -1 : 1, sy < 0 ? -1 : 1);
    }
    float v = parse_f(rest);
    if (kind == "rotation") return MutationSpec::rotation(std::fabs(v), v < 0 ? -1 : 1);
    if (kind == "scale") return MutationSpec::scale(v);
    if (kind == "shear") return MutationSpec::shear(std::fabs(v), v < 0 ? -1 : 1);
    if (kind == "contrast") return MutationSpec::contrast(v);
    if (kind == "brightness") return MutationSpec::brightness(v);
    if (kind == "blur") return MutationSpec::blur(static_cast<int>(v));
    throw ConfigError("unknown mutation kind '" + kind + "'");
}

Tensor mutate(const Tensor& image, const MutationSpec& spec) {
    if (image.rank() != 3) {
        throw ShapeError("mutate expects a [c,h,w] image, got " + shape_str(image.shape()));
    }
    spec.validate();
    const int h = image.dim(1), w = image.dim(2);
    switch (spec.kind) {
        case MutationKind::Shift: {
            // dst(y,x) = src(y - dy, x - dx)
            float dx = spec.sign_x * spec.shift_x * static_cast<float>(w);
            float dy = spec.sign_y * spec.shift_y * static_cast<float>(h);
            return affine_resample(image, 1, 0, 0, 1, -dy, -dx);
        }
        case MutationKind::Rotation: {
            // Inverse map rotates by -theta in the (x, y) = (col, row) plane.
            double theta = spec.sign * spec.angle * kPi / 180.0;
            float c = static_cast<float>(std::cos(theta));
            float s = static_cast<float>(std::sin(theta));
            // [sy]   [ c  -s ] [dy]
            // [sx] = [ s   c ] [dx]  (inverse of the +theta forward map)
            return affine_resample(image, c, -s, s, c, 0, 0);
        }
        case MutationKind::Scale: {
            float inv = 1.0f / spec.ratio;
            return affine_resample(image, inv, 0, 0, inv, 0, 0);
        }
        case MutationKind::Shear: {
            // Forward: x' = x + tan(s) * (y - cy); inverse subtracts.
            double t = std::tan(spec.sign * spec.angle * kPi / 180.0);
            return affine_resample(image, 1, 0, static_cast<float>(-t), 1, 0, 0);
        }
        case MutationKind::Contrast: {
            Tensor out(image.shape());
            for (size_t i = 0; i < image.numel(); ++i) {
                out[i] = clamp01(spec.gain * (image[i] - 0.5f) + 0.5f);
            }
            return out;
        }
        case MutationKind::Brightness: {
            Tensor out(image.shape());
            for (size_t i = 0; i < image.numel(); ++i) out[i] = clamp01(spec.gain * image[i]);
            return out;
        }
        case MutationKind::Blur:
            return box_blur(image, spec.kernel);
    }
    throw ConfigError("unreachable mutation kind");
}

MutationSpec sample_spec(Rng& rng) {
    MutationSpec s;
    switch (rng.uniform_int(7)) {
        case 0:
            s.kind = MutationKind::Shift;
            s.shift_x = rng.uniform_float(0.05f, 0.15f);
            s.shift_y = rng.uniform_float(0.05f, 0.15f);
            s.sign_x = rng.coin_flip() ? 1 : -1;
            s.sign_y = rng.coin_flip() ? 1 : -1;
            break;
        case 1:
            s.kind = MutationKind::Rotation;
            s.angle = rng.uniform_float(5.0f, 25.0f);
            s.sign = rng.coin_flip() ? 1 : -1;
            break;
        case 2:
            s.kind = MutationKind::Scale;
            s.ratio = rng.uniform_float(0.8f, 1.2f);
            break;
        case 3:
            s.kind = MutationKind::Shear;
            s.angle = rng.uniform_float(15.0f, 30.0f);
            s.sign = rng.coin_flip() ? 1 : -1;
            break;
        case 4:
            s.kind = MutationKind::Contrast;
            s.gain = rng.uniform_float(0.5f, 1.5f);
            break;
        case 5:
            s.kind = MutationKind::Brightness;
            s.gain = rng.uniform_float(0.5f, 1.5f);
            break;
        case 6: {
            static const int kSizes[4] = {2, 3, 5, 7};
            s.kind = MutationKind::Blur;
            s.kernel = kSizes[rng.uniform_int(4)];
            break;
        }
    }
    return s;
}

namespace {

std::vector<CandidatePair> build_pairs(const LabeledDataset& dataset,
                                       const std::vector<MutationSpec>& specs) {
    const int n = dataset.size();
    std::vector<CandidatePair> pairs(n);
    parallel_chunks(0, static_cast<size_t>(n), 64, [&](size_t lo, size_t hi, size_t) {
        for (size_t i = lo; i < hi; ++i) {
            CandidatePair& p = pairs[i];
            p.index = static_cast<int>(i);
            p.original = dataset.image(static_cast<int>(i));
            p.spec = specs[i];
            p.mutated = mutate(p.original, p.spec);
            p.label = dataset.labels[i];
        }
    });
    return pairs;
}

}  // namespace

std::vector<CandidatePair> generate_candidates(const LabeledDataset& dataset, uint64_t seed) {
    if (dataset.size() == 0) throw ConfigError("cannot generate candidates from an empty dataset");
    std::vector<MutationSpec> specs(dataset.size());
    for (int i = 0; i < dataset.size(); ++i) {
        Rng rng(seed, static_cast<uint64_t>(i));
        specs[i] = sample_spec(rng);
    }
    return build_pairs(dataset, specs);
}

std::vector<CandidatePair> generate_candidates_fixed(const LabeledDataset& dataset,
                                                     const MutationSpec& spec) {
    if (dataset.size() == 0) throw ConfigError("cannot generate candidates from an empty dataset");
    spec.validate();
    std::vector<MutationSpec> specs(dataset.size(), spec);
    return build_pairs(dataset, specs);
}

std::vector<CandidatePair> candidates_from_specs(const LabeledDataset& dataset,
                                                 const std::vector<MutationSpec>& specs) {
    if (static_cast<size_t>(dataset.size()) != specs.size()) {
        throw ConfigError("mutation log holds " + std::to_string(specs.size()) +
                          " specs for a dataset of " + std::to_string(dataset.size()));
    }
    return build_pairs(dataset, specs);
}

void save_mutation_log(const std::string& path, const std::vector<MutationSpec>& specs,
                       const std::string& dataset_ref, uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << "# mutation log v1\n";
    out << "# dataset " << dataset_ref << "\n";
    out << "# seed " << seed << "\n";
    out << "index,kind,shift_x,shift_y,sign_x,sign_y,angle,sign,ratio,gain,kernel\n";
    std::string line;
    for (size_t i = 0; i < specs.size(); ++i) {
        const MutationSpec& s = specs[i];
        line.clear();
        line += std::to_string(i);
        line += ',';
        line += mutation_kind_name(s.kind);
        line += ',';
        append_float(line, s.shift_x);
        line += ',';
        append_float(line, s.shift_y);
        line += ',';
        line += std::to_string(s.sign_x);
        line += ',';
        line += std::to_string(s.sign_y);
        line += ',';
        append_float(line, s.angle);
        line += ',';
        line += std::to_string(s.sign);
        line += ',';
        append_float(line, s.ratio);
        line += ',';
        append_float(line, s.gain);
        line += ',';
        line += std::to_string(s.kernel);
        line += '\n';
        out << line;
    }
    if (!out) throw FormatError(path + ": write failure");
}

MutationLog load_mutation_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    MutationLog log;
    std::string line;
    size_t expected_index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            if (key == "dataset") hs >> log.dataset_ref;
            if (key == "seed") hs >> log.seed;
            continue;
        }
        if (line.rfind("index,", 0) == 0) continue;  // column header
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 11) {
            throw FormatError(path + ": malformed row '" + line + "'");
        }
        if (std::stoul(fields[0]) != expected_index) {
            throw FormatError(path + ": rows out of order at index " + fields[0]);
        }
        MutationSpec s;
        s.kind = mutation_kind_from_name(fields[1]);
        s.shift_x = std::stof(fields[2]);
        s.shift_y = std::stof(fields[3]);
        s.sign_x = std::stoi(fields[4]);
        s.sign_y = std::stoi(fields[5]);
        s.angle = std::stof(fields[6]);
        s.sign = std::stoi(fields[7]);
        s.ratio = std::stof(fields[8]);
        s.gain = std::stof(fields[9]);
        s.kernel = std::stoi(fields[10]);
        s.validate();
        log.specs.push_back(s);
        ++expected_index;
    }
    return log;
}

}  // namespace nss
