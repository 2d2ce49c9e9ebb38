#include "cardlv/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cardlv/errors.hpp"

namespace cardlv {

Image::Image(int h, int w, double fill) : height(h), width(w) {
    if (h < 0 || w < 0) throw DimensionError("image: negative dimensions");
    data.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill);
}

Image Image::from_data(int h, int w, std::vector<double> d) {
    if (h < 0 || w < 0) throw DimensionError("image: negative dimensions");
    if (d.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w))
        throw DimensionError("image: data length " + std::to_string(d.size()) + " != " +
                             std::to_string(h) + "x" + std::to_string(w));
    for (double v : d)
        if (!std::isfinite(v)) throw NumericError("image: non-finite intensity");
    Image img;
    img.height = h;
    img.width = w;
    img.data = std::move(d);
    return img;
}

BinaryMask::BinaryMask(int h, int w, std::uint8_t fill) : height(h), width(w) {
    if (h < 0 || w < 0) throw DimensionError("mask: negative dimensions");
    if (fill > 1) throw InputError("mask: fill value must be 0 or 1");
    data.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill);
}

long BinaryMask::count_foreground() const {
    long n = 0;
    for (std::uint8_t v : data) n += v;
    return n;
}

LevelSetField::LevelSetField(int h, int w, double fill) : height(h), width(w) {
    if (h < 0 || w < 0) throw DimensionError("field: negative dimensions");
    data.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill);
}

// ---- PGM I/O -----------------------------------------------------------------

namespace {

int read_pnm_token(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments, then reads one nonnegative integer.
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF) throw LoadError("pgm: truncated header in " + path);
    int value = 0;
    bool any = false;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        any = true;
        ch = in.get();
    }
    if (!any) throw LoadError("pgm: malformed header in " + path);
    return value;
}

std::vector<std::uint8_t> load_pgm_bytes(const std::string& path, int& h, int& w) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("pgm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') throw LoadError("pgm: not a P5 file: " + path);
    w = read_pnm_token(in, path);
    h = read_pnm_token(in, path);
    const int maxval = read_pnm_token(in, path);
    if (maxval != 255) throw LoadError("pgm: only maxval 255 supported: " + path);
    if (h <= 0 || w <= 0) throw LoadError("pgm: bad dimensions in " + path);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw LoadError("pgm: truncated pixel data in " + path);
    return bytes;
}

void save_pgm_bytes(const std::vector<std::uint8_t>& bytes, int h, int w,
                    const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("pgm: cannot write " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw LoadError("pgm: write failed for " + path);
}

} // namespace

Image load_pgm(const std::string& path) {
    int h = 0, w = 0;
    const auto bytes = load_pgm_bytes(path, h, w);
    Image img(h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

void save_pgm(const Image& img, const std::string& path) {
    std::vector<std::uint8_t> bytes(img.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = std::clamp(img.data[i], 0.0, 1.0);
        bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    save_pgm_bytes(bytes, img.height, img.width, path);
}

BinaryMask load_mask_pgm(const std::string& path) {
    int h = 0, w = 0;
    const auto bytes = load_pgm_bytes(path, h, w);
    BinaryMask mask(h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (bytes[i] == 0)
            mask.data[i] = 0;
        else if (bytes[i] == 255)
            mask.data[i] = 1;
        else
            throw LoadError("pgm: mask pixel not in {0,255} in " + path);
    }
    return mask;
}

void save_mask_pgm(const BinaryMask& mask, const std::string& path) {
    std::vector<std::uint8_t> bytes(mask.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
    save_pgm_bytes(bytes, mask.height, mask.width, path);
}

// ---- Grid operations ---------------------------------------------------------

Image conv2d_valid(const Image& image, const Image& kernel, double bias) {
    const int kh = kernel.height, kw = kernel.width;
    if (kh > image.height || kw > image.width)
        throw DimensionError("conv2d_valid: kernel " + std::to_string(kh) + "x" +
                             std::to_string(kw) + " larger than image " +
                             std::to_string(image.height) + "x" + std::to_string(image.width));
    const int oh = image.height - kh + 1;
    const int ow = image.width - kw + 1;
    Image out(oh, ow);
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            double acc = bias;
            for (int k1 = 0; k1 < kh; ++k1) {
                const double* irow = image.data.data() + static_cast<std::size_t>(i + k1) * image.width + j;
                const double* krow = kernel.data.data() + static_cast<std::size_t>(k1) * kw;
                for (int k2 = 0; k2 < kw; ++k2) acc += krow[k2] * irow[k2];
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Image avg_pool(const Image& map, int window) {
    if (window <= 0) throw DimensionError("avg_pool: window must be positive");
    if (map.height % window != 0 || map.width % window != 0)
        throw DimensionError("avg_pool: dimensions " + std::to_string(map.height) + "x" +
                             std::to_string(map.width) + " not divisible by window " +
                             std::to_string(window));
    const int oh = map.height / window;
    const int ow = map.width / window;
    const double inv = 1.0 / (static_cast<double>(window) * window);
    Image out(oh, ow);
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            double acc = 0.0;
            for (int r = i * window; r < (i + 1) * window; ++r)
                for (int c = j * window; c < (j + 1) * window; ++c) acc += map.at(r, c);
            out.at(i, j) = acc * inv;
        }
    }
    return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Image sigmoid(const Image& img) {
    Image out(img.height, img.width);
    for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = sigmoid(img.data[i]);
    return out;
}

Image resample(const Image& img, int new_h, int new_w, Interp method) {
    if (new_h < 1 || new_w < 1) throw DimensionError("resample: target dimensions must be >= 1");
    if (img.height == 0 || img.width == 0) throw DimensionError("resample: empty source image");
    Image out(new_h, new_w);
    const double sy = static_cast<double>(img.height) / new_h;
    const double sx = static_cast<double>(img.width) / new_w;
    for (int r = 0; r < new_h; ++r) {
        for (int c = 0; c < new_w; ++c) {
            const double src_y = (r + 0.5) * sy - 0.5;
            const double src_x = (c + 0.5) * sx - 0.5;
            if (method == Interp::nearest) {
                const int ry = std::clamp(static_cast<int>(std::lround(src_y)), 0, img.height - 1);
                const int rx = std::clamp(static_cast<int>(std::lround(src_x)), 0, img.width - 1);
                out.at(r, c) = img.at(ry, rx);
            } else {
                const double fy = std::clamp(src_y, 0.0, static_cast<double>(img.height - 1));
                const double fx = std::clamp(src_x, 0.0, static_cast<double>(img.width - 1));
                const int y0 = static_cast<int>(std::floor(fy));
                const int x0 = static_cast<int>(std::floor(fx));
                const int y1 = std::min(y0 + 1, img.height - 1);
                const int x1 = std::min(x0 + 1, img.width - 1);
                const double ty = fy - y0;
                const double tx = fx - x0;
                out.at(r, c) = (1 - ty) * ((1 - tx) * img.at(y0, x0) + tx * img.at(y0, x1)) +
                               ty * ((1 - tx) * img.at(y1, x0) + tx * img.at(y1, x1));
            }
        }
    }
    return out;
}

Point centroid(const BinaryMask& mask) {
    double sx = 0.0, sy = 0.0;
    long n = 0;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (mask.at(r, c)) {
                sx += c;
                sy += r;
                ++n;
            }
        }
    }
    if (n == 0) throw DegenerateError("centroid: empty mask");
    return {sx / n, sy / n};
}

CropResult crop(const Image& img, double cx, double cy, int size) {
    if (size <= 0) throw DimensionError("crop: size must be positive");
    CropResult res;
    res.image = Image(size, size);
    res.x0 = static_cast<int>(std::lround(cx)) - size / 2;
    res.y0 = static_cast<int>(std::lround(cy)) - size / 2;
    for (int r = 0; r < size; ++r) {
        const int sr = res.y0 + r;
        for (int c = 0; c < size; ++c) {
            const int sc = res.x0 + c;
            if (sr < 0 || sr >= img.height || sc < 0 || sc >= img.width) {
                res.padded = true;
            } else {
                res.image.at(r, c) = img.at(sr, sc);
            }
        }
    }
    return res;
}

} // namespace cardlv
