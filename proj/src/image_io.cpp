#include "strokeforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace strokeforge {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw ImageIoError(std::string("PNG decode failed: ") + img.message);
    }
    const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    const bool alpha = (img.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    int channels = 1;
    if (alpha) {
        img.format = PNG_FORMAT_RGBA;
        channels = 4;
    } else if (color) {
        img.format = PNG_FORMAT_RGB;
        channels = 3;
    } else {
        img.format = PNG_FORMAT_GRAY;
    }
    if (img.width == 0 || img.height == 0 || img.width > 16384 || img.height > 16384) {
        png_image_free(&img);
        throw ImageIoError("PNG dimensions out of range");
    }
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw ImageIoError("PNG decode failed: " + msg);
    }
    RasterImage out(static_cast<int>(img.width), static_cast<int>(img.height), channels);
    auto d = out.data();
    for (std::size_t i = 0; i < buf.size(); ++i) d[i] = buf[i] / 255.0;
    return out;
}

class PpmCursor {
public:
    explicit PpmCursor(std::span<const std::uint8_t> b) : b_(b) {}

    long number() {
        skip_space();
        if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw ImageIoError("PPM header malformed");
        long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_++] - '0');
            if (v > 1000000) throw ImageIoError("PPM header value too large");
        }
        return v;
    }
    void expect_single_space() {
        if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw ImageIoError("PPM header malformed");
        ++pos_;
    }
    std::size_t pos() const { return pos_; }

private:
    void skip_space() {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 2;
};

RasterImage decode_ppm(std::span<const std::uint8_t> bytes) {
    PpmCursor cur(bytes);
    const long w = cur.number();
    const long h = cur.number();
    const long maxval = cur.number();
    cur.expect_single_space();
    if (w < 1 || h < 1 || w > 16384 || h > 16384) throw ImageIoError("PPM dimensions out of range");
    if (maxval < 1 || maxval > 65535) throw ImageIoError("PPM maxval out of range");
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * 3 * sample_bytes;
    if (bytes.size() - cur.pos() < need) throw ImageIoError("PPM pixel data truncated");
    RasterImage out(static_cast<int>(w), static_cast<int>(h), 3);
    auto d = out.data();
    const std::uint8_t* p = bytes.data() + cur.pos();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const unsigned v = sample_bytes == 2 ? (unsigned(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
        d[i] = maxval == 255 ? v / 255.0 : std::round(double(v) * 255.0 / double(maxval)) / 255.0;
    }
    return out;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
    throw ImageIoError("unrecognized image format (expected PNG or binary PPM)");
}

RasterImage read_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const ImageIoError& e) {
        throw ImageIoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = image.channels() == 1 ? PNG_FORMAT_GRAY : image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> px(image.data().size());
    const auto d = image.data();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(d[i]);

    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(img, size, 0, px.data(), 0, nullptr)) {
        throw ImageIoError(std::string("PNG encode failed: ") + img.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, px.data(), 0, nullptr)) {
        throw ImageIoError(std::string("PNG encode failed: ") + img.message);
    }
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const RasterImage& image) {
    write_file_bytes(path, encode_png(image));
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& image) {
    const RasterImage rgb = to_rgb(image);
    const std::string header =
        "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (double v : rgb.data()) out.push_back(to_byte(v));
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageIoError("write failed for " + path.string());
}

}  // namespace strokeforge
