#include "nss/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nss/parallel.hpp"
#include "nss/rng.hpp"

namespace nss {

namespace {

struct Point {
    float x, y;
};

using Stroke = std::vector<Point>;

// Glyphs in a unit box, y growing downward. Loops (0, 8) are closed polygons.
std::vector<Stroke> glyph_strokes(int digit) {
    auto loop = [](float cx, float cy, float rx, float ry) {
        Stroke s;
        const int steps = 14;
        for (int i = 0; i <= steps; ++i) {
            float t = 2.0f * 3.14159265f * i / steps;
            s.push_back({cx + rx * std::sin(t), cy - ry * std::cos(t)});
        }
        return s;
    };
    switch (digit) {
        case 0: return {loop(0.5f, 0.5f, 0.22f, 0.36f)};
        case 1: return {{{0.38f, 0.26f}, {0.54f, 0.12f}, {0.54f, 0.88f}}};
        case 2:
            return {{{0.28f, 0.3f},
                     {0.34f, 0.14f},
                     {0.56f, 0.1f},
                     {0.72f, 0.2f},
                     {0.72f, 0.38f},
                     {0.52f, 0.56f},
                     {0.28f, 0.76f},
                     {0.26f, 0.88f},
                     {0.74f, 0.88f}}};
        case 3:
            return {{{0.28f, 0.18f},
                     {0.48f, 0.1f},
                     {0.68f, 0.2f},
                     {0.68f, 0.36f},
                     {0.48f, 0.48f},
                     {0.68f, 0.6f},
                     {0.68f, 0.78f},
                     {0.48f, 0.9f},
                     {0.27f, 0.8f}}};
        case 4:
            return {{{0.62f, 0.1f}, {0.26f, 0.62f}, {0.78f, 0.62f}},
                    {{0.62f, 0.34f}, {0.62f, 0.9f}}};
        case 5:
            return {{{0.72f, 0.12f},
                     {0.32f, 0.12f},
                     {0.3f, 0.46f},
                     {0.55f, 0.4f},
                     {0.72f, 0.54f},
                     {0.71f, 0.76f},
                     {0.5f, 0.9f},
                     {0.27f, 0.8f}}};
        case 6:
            return {{{0.64f, 0.12f},
                     {0.44f, 0.22f},
                     {0.32f, 0.46f},
                     {0.32f, 0.72f},
                     {0.46f, 0.88f},
                     {0.64f, 0.8f},
                     {0.68f, 0.6f},
                     {0.52f, 0.5f},
                     {0.34f, 0.6f}}};
        case 7: return {{{0.26f, 0.12f}, {0.74f, 0.12f}, {0.44f, 0.9f}}};
        case 8:
            return {loop(0.5f, 0.3f, 0.18f, 0.18f), loop(0.5f, 0.68f, 0.21f, 0.2f)};
        case 9:
            return {{{0.38f, 0.88f},
                     {0.56f, 0.78f},
                     {0.68f, 0.54f},
                     {0.68f, 0.28f},
                     {0.54f, 0.12f},
                     {0.36f, 0.2f},
                     {0.32f, 0.4f},
                     {0.48f, 0.5f},
                     {0.66f, 0.4f}}};
        default: throw ConfigError("digit out of range");
    }
}

float point_segment_distance(float px, float py, Point a, Point b) {
    float vx = b.x - a.x, vy = b.y - a.y;
    float wx = px - a.x, wy = py - a.y;
    float vv = vx * vx + vy * vy;
    float t = vv > 0.0f ? std::clamp((wx * vx + wy * vy) / vv, 0.0f, 1.0f) : 0.0f;
    float dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

LabeledDataset synthetic_digits(int count, uint64_t seed) {
    if (count <= 0) throw ConfigError("dataset size must be positive");
    const int hw = 28;
    LabeledDataset ds;
    ds.images = Tensor({count, 1, hw, hw});
    ds.labels.resize(count);
    ds.class_count = 10;

    parallel_chunks(0, static_cast<size_t>(count), 64, [&](size_t lo, size_t hi, size_t) {
        for (size_t i = lo; i < hi; ++i) {
            Rng rng(seed, i);
            const int digit = static_cast<int>(i % 10);
            ds.labels[i] = digit;

            // Per-sample jitter: rotation, anisotropic scale, shear, shift,
            // plus independent control-point wobble so strokes deform, not
            // just move.
            float rot = rng.uniform_float(-0.30f, 0.30f);  // radians, ~17 deg
            float sx = rng.uniform_float(0.72f, 1.18f);
            float sy = rng.uniform_float(0.72f, 1.18f);
            float shear = rng.uniform_float(-0.28f, 0.28f);
            float tx = rng.uniform_float(-0.11f, 0.11f);
            float ty = rng.uniform_float(-0.11f, 0.11f);
            float width = rng.uniform_float(0.035f, 0.085f);  // stroke radius, unit box
            float intensity = rng.uniform_float(0.6f, 1.0f);
            float wobble = rng.uniform_float(0.0f, 0.035f);

            float cr = std::cos(rot), sr = std::sin(rot);
            auto jitter = [&](Point p) {
                float x = (p.x - 0.5f) * sx;
                float y = (p.y - 0.5f) * sy;
                x += shear * y;
                float xr = cr * x - sr * y;
                float yr = sr * x + cr * y;
                return Point{xr + 0.5f + tx, yr + 0.5f + ty};
            };

            std::vector<Stroke> strokes = glyph_strokes(digit);
            for (auto& s : strokes) {
                for (auto& p : s) {
                    p = jitter(p);
                    p.x += rng.uniform_float(-wobble, wobble);
                    p.y += rng.uniform_float(-wobble, wobble);
                }
            }

            float* img = ds.images.row(i);
            for (int y = 0; y < hw; ++y) {
                for (int x = 0; x < hw; ++x) {
                    float px = (static_cast<float>(x) + 0.5f) / hw;
                    float py = (static_cast<float>(y) + 0.5f) / hw;
                    float dist = 1e9f;
                    for (const auto& s : strokes) {
                        for (size_t j = 0; j + 1 < s.size(); ++j) {
                            dist = std::min(dist, point_segment_distance(px, py, s[j], s[j + 1]));
                        }
                    }
                    // Soft-edged stroke: full inside, 1.5px falloff outside.
                    float edge = (dist - width) * hw / 1.5f;
                    float v = edge <= 0.0f ? 1.0f : std::max(0.0f, 1.0f - edge);
                    v *= intensity;
                    v += rng.uniform_float(-0.045f, 0.045f);
                    img[y * hw + x] = std::clamp(v, 0.0f, 1.0f);
                }
            }
        }
    });
    return ds;
}

}  // namespace nss
