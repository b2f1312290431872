#include "nss/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

namespace nss {

namespace {

constexpr uint32_t kImagesMagic = 0x00000803;
constexpr uint32_t kLabelsMagic = 0x00000801;

uint32_t read_be32(std::istream& in, const std::string& path, const char* what) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw FormatError(path + ": truncated header while reading " + std::string(what));
    }
    return (uint32_t(buf[0]) << 24) | (uint32_t(buf[1]) << 16) | (uint32_t(buf[2]) << 8) |
           uint32_t(buf[3]);
}

void write_be32(std::ostream& out, uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

size_t remaining_bytes(std::istream& in) {
    auto cur = in.tellg();
    in.seekg(0, std::ios::end);
    auto end = in.tellg();
    in.seekg(cur);
    return static_cast<size_t>(end - cur);
}

std::vector<uint8_t> read_payload(std::istream& in, size_t expected, const std::string& path) {
    if (remaining_bytes(in) != expected) {
        throw FormatError(path + ": payload holds " + std::to_string(remaining_bytes(in)) +
                          " bytes, header promises " + std::to_string(expected));
    }
    std::vector<uint8_t> payload(expected);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected));
    if (!in) throw FormatError(path + ": short read");
    return payload;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    return in;
}

}  // namespace

Tensor LabeledDataset::image(int i) const {
    std::vector<int> shape(images.shape().begin() + 1, images.shape().end());
    Tensor out(shape);
    std::copy(images.row(i), images.row(i) + images.row_size(), out.data());
    return out;
}

LabeledDataset LabeledDataset::subset(const std::vector<int>& indices) const {
    LabeledDataset out;
    std::vector<int> shape = images.shape();
    shape[0] = static_cast<int>(indices.size());
    out.images = Tensor(shape);
    out.labels.reserve(indices.size());
    out.class_count = class_count;
    const size_t row = images.row_size();
    for (size_t i = 0; i < indices.size(); ++i) {
        std::copy(images.row(indices[i]), images.row(indices[i]) + row, out.images.row(i));
        out.labels.push_back(labels[indices[i]]);
    }
    return out;
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        int class_count) {
    auto img_in = open_input(images_path);
    uint32_t magic = read_be32(img_in, images_path, "magic");
    if (magic != kImagesMagic) {
        throw FormatError(images_path + ": bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%08x", magic);
            return std::string(buf);
        }() + ", expected 0x00000803");
    }
    uint32_t n = read_be32(img_in, images_path, "count");
    uint32_t rows = read_be32(img_in, images_path, "rows");
    uint32_t cols = read_be32(img_in, images_path, "cols");
    auto pixels = read_payload(img_in, size_t(n) * rows * cols, images_path);

    auto lbl_in = open_input(labels_path);
    uint32_t lbl_magic = read_be32(lbl_in, labels_path, "magic");
    if (lbl_magic != kLabelsMagic) {
        throw FormatError(labels_path + ": bad magic, expected 0x00000801");
    }
    uint32_t lbl_n = read_be32(lbl_in, labels_path, "count");
    if (lbl_n != n) {
        throw FormatError("image count " + std::to_string(n) + " does not match label count " +
                          std::to_string(lbl_n));
    }
    auto raw_labels = read_payload(lbl_in, lbl_n, labels_path);

    LabeledDataset ds;
    ds.images = Tensor({static_cast<int>(n), 1, static_cast<int>(rows), static_cast<int>(cols)});
    float* out = ds.images.data();
    for (size_t i = 0; i < pixels.size(); ++i) out[i] = static_cast<float>(pixels[i]) / 255.0f;
    ds.labels.assign(raw_labels.begin(), raw_labels.end());

    int max_label = ds.labels.empty() ? -1 : *std::max_element(ds.labels.begin(), ds.labels.end());
    ds.class_count = class_count > 0 ? class_count : max_label + 1;
    if (max_label >= ds.class_count) {
        throw FormatError("label " + std::to_string(max_label) + " exceeds class count " +
                          std::to_string(ds.class_count));
    }
    return ds;
}

void save_idx(const LabeledDataset& dataset, const std::string& images_path,
              const std::string& labels_path) {
    if (dataset.images.rank() != 4 || dataset.images.dim(1) != 1) {
        throw FormatError("IDX dump requires [n,1,h,w] grayscale images, got " +
                          shape_str(dataset.images.shape()));
    }
    std::ofstream img_out(images_path, std::ios::binary);
    if (!img_out) throw FormatError(images_path + ": cannot open for writing");
    write_be32(img_out, kImagesMagic);
    write_be32(img_out, static_cast<uint32_t>(dataset.images.dim(0)));
    write_be32(img_out, static_cast<uint32_t>(dataset.images.dim(2)));
    write_be32(img_out, static_cast<uint32_t>(dataset.images.dim(3)));
    for (size_t i = 0; i < dataset.images.numel(); ++i) {
        float v = std::clamp(dataset.images[i], 0.0f, 1.0f);
        img_out.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0f))));
    }
    if (!img_out) throw FormatError(images_path + ": write failure");

    std::ofstream lbl_out(labels_path, std::ios::binary);
    if (!lbl_out) throw FormatError(labels_path + ": cannot open for writing");
    write_be32(lbl_out, kLabelsMagic);
    write_be32(lbl_out, static_cast<uint32_t>(dataset.labels.size()));
    for (int l : dataset.labels) lbl_out.put(static_cast<char>(l));
    if (!lbl_out) throw FormatError(labels_path + ": write failure");
}

}  // namespace nss
