#include "dparnet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dparnet/errors.hpp"

namespace fs = std::filesystem;

namespace dparnet {

namespace {

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngRead() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWrite() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace

Frame load_frame(const std::string& path) {
    PngRead ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open PNG for reading: " + path);

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw IoError("not a PNG file: " + path);

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw IoError("libpng init failed reading " + path);
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("libpng error reading " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    int color_type = png_get_color_type(ctx.png, ctx.info);

    // normalize palette/low-depth/alpha to plain gray or RGB
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
    if (bit_depth == 16) png_set_swap(ctx.png);  // stream is big-endian
    png_read_update_info(ctx.png, ctx.info);

    bit_depth = png_get_bit_depth(ctx.png, ctx.info);
    color_type = png_get_color_type(ctx.png, ctx.info);
    if (bit_depth != 8 && bit_depth != 16)
        throw IoError("unsupported PNG bit depth " + std::to_string(bit_depth) + " in " + path);
    int channels;
    if (color_type == PNG_COLOR_TYPE_GRAY)
        channels = 1;
    else if (color_type == PNG_COLOR_TYPE_RGB)
        channels = 3;
    else
        throw IoError("unsupported PNG color type in " + path);

    const size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
    std::vector<unsigned char> raw(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);

    Frame f(static_cast<int>(h), static_cast<int>(w), channels);
    const double denom = bit_depth == 8 ? 255.0 : 65535.0;
    for (int y = 0; y < f.h; ++y) {
        for (int x = 0; x < f.w; ++x) {
            for (int ch = 0; ch < channels; ++ch) {
                double v;
                if (bit_depth == 8) {
                    v = raw[y * rowbytes + (static_cast<size_t>(x) * channels + ch)];
                } else {
                    const unsigned char* p =
                        &raw[y * rowbytes + 2 * (static_cast<size_t>(x) * channels + ch)];
                    v = static_cast<double>(p[0] | (p[1] << 8));
                }
                f.at(ch, y, x) = v / denom;
            }
        }
    }
    return f;
}

void save_frame(const Frame& frame, const std::string& path, int bit_depth) {
    if (frame.c != 1 && frame.c != 3)
        throw std::invalid_argument("save_frame: channels must be 1 or 3");
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("save_frame: bit depth must be 8 or 16");

    PngWrite ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw IoError("cannot open PNG for writing: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw IoError("libpng init failed writing " + path);
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("libpng error writing " + path);

    png_init_io(ctx.png, ctx.fp);
    const int color_type = frame.c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(ctx.png, ctx.info, frame.w, frame.h, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    if (bit_depth == 16) png_set_swap(ctx.png);

    const double peak = bit_depth == 8 ? 255.0 : 65535.0;
    const size_t rowbytes = static_cast<size_t>(frame.w) * frame.c * (bit_depth / 8);
    std::vector<unsigned char> row(rowbytes);
    for (int y = 0; y < frame.h; ++y) {
        for (int x = 0; x < frame.w; ++x) {
            for (int ch = 0; ch < frame.c; ++ch) {
                double v = std::clamp(frame.at(ch, y, x), 0.0, 1.0);
                auto q = static_cast<unsigned int>(std::lround(v * peak));
                if (bit_depth == 8) {
                    row[static_cast<size_t>(x) * frame.c + ch] = static_cast<unsigned char>(q);
                } else {
                    unsigned char* p = &row[2 * (static_cast<size_t>(x) * frame.c + ch)];
                    p[0] = static_cast<unsigned char>(q & 0xff);
                    p[1] = static_cast<unsigned char>((q >> 8) & 0xff);
                }
            }
        }
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

Sequence load_sequence(const std::string& dir, const std::string& id) {
    if (!fs::is_directory(dir)) throw IoError("sequence directory not found: " + dir);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png")
            names.push_back(e.path().string());
    }
    if (names.empty()) throw IoError("no PNG frames in " + dir);
    std::sort(names.begin(), names.end());

    Sequence seq;
    seq.id = id;
    for (const auto& name : names) {
        seq.frames.push_back(load_frame(name));
        if (!seq.frames.back().same_shape(seq.frames.front()))
            throw IoError("inconsistent frame shapes in " + dir);
    }
    return seq;
}

void save_sequence(const Sequence& seq, const std::string& dir, int bit_depth) {
    fs::create_directories(dir);
    char name[32];
    for (int t = 0; t < seq.length(); ++t) {
        std::snprintf(name, sizeof(name), "frame_%05d.png", t);
        save_frame(seq.frames[t], (fs::path(dir) / name).string(), bit_depth);
    }
}

Frame temporal_mean(const Sequence& seq) {
    if (seq.frames.empty()) throw std::invalid_argument("temporal_mean: empty sequence");
    Frame mean(seq.h(), seq.w(), seq.c());
    for (const Frame& f : seq.frames)
        for (size_t i = 0; i < mean.data.size(); ++i) mean.data[i] += f.data[i];
    const double inv = 1.0 / seq.length();
    for (double& v : mean.data) v *= inv;
    return mean;
}

}  // namespace dparnet
