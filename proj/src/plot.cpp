#include "dparnet/plot.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "dparnet/errors.hpp"

namespace dparnet {

namespace {

constexpr int kW = 800;
constexpr int kH = 600;
constexpr int kMargin = 64;

struct Canvas {
    std::vector<unsigned char> px;
    Canvas() : px(static_cast<size_t>(kW) * kH * 3, 255) {}
    void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
        if (x < 0 || x >= kW || y < 0 || y >= kH) return;
        unsigned char* p = &px[(static_cast<size_t>(y) * kW + x) * 3];
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }
    void line(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g,
              unsigned char b) {
        const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
        for (int i = 0; i <= steps; ++i) {
            const int x = x0 + (x1 - x0) * i / steps;
            const int y = y0 + (y1 - y0) * i / steps;
            set(x, y, r, g, b);
            set(x, y + 1, r, g, b);  // 2px strokes read better
        }
    }
};

// 3x5 glyphs for tick labels
const char* glyph(char c) {
    switch (c) {
        case '0': return "111101101101111";
        case '1': return "010110010010111";
        case '2': return "111001111100111";
        case '3': return "111001111001111";
        case '4': return "101101111001001";
        case '5': return "111100111001111";
        case '6': return "111100111101111";
        case '7': return "111001010010010";
        case '8': return "111101111101111";
        case '9': return "111101111001111";
        case '.': return "000000000000010";
        case '-': return "000000111000000";
        default: return nullptr;
    }
}

void draw_text(Canvas& c, int x, int y, const std::string& s) {
    for (char ch : s) {
        const char* g = glyph(ch);
        if (g) {
            for (int i = 0; i < 15; ++i)
                if (g[i] == '1') {
                    const int px = x + (i % 3) * 2, py = y + (i / 3) * 2;
                    c.set(px, py, 40, 40, 40);
                    c.set(px + 1, py, 40, 40, 40);
                    c.set(px, py + 1, 40, 40, 40);
                    c.set(px + 1, py + 1, 40, 40, 40);
                }
        }
        x += 8;
    }
}

std::string fmt_tick(double v) {
    char buf[32];
    if (std::abs(v) >= 100.0 || v == std::floor(v))
        std::snprintf(buf, sizeof(buf), "%.0f", v);
    else
        std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

const unsigned char kPalette[][3] = {
    {204, 37, 41}, {57, 106, 177}, {62, 150, 81}, {218, 124, 48}, {83, 81, 84}, {107, 76, 154}};

}  // namespace

void render_curves(const std::vector<PlotCurve>& curves, const std::string& path,
                   const std::string& xlabel, const std::string& ylabel) {
    if (curves.empty()) throw ConfigError("render_curves: no curves to draw");
    for (const PlotCurve& c : curves)
        if (c.points.empty()) throw ConfigError("render_curves: empty curve " + c.label);

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const PlotCurve& c : curves)
        for (const CurvePoint& p : c.points) {
            xmin = std::min(xmin, static_cast<double>(p.epoch));
            xmax = std::max(xmax, static_cast<double>(p.epoch));
            ymin = std::min(ymin, p.val_metric);
            ymax = std::max(ymax, p.val_metric);
        }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    Canvas canvas;
    auto to_px = [&](double x, double y) {
        const int px = kMargin + static_cast<int>((x - xmin) / (xmax - xmin) * (kW - 2 * kMargin));
        const int py =
            kH - kMargin - static_cast<int>((y - ymin) / (ymax - ymin) * (kH - 2 * kMargin));
        return std::pair<int, int>(px, py);
    };

    // grid + ticks
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        const int gx = to_px(xv, ymin).first;
        const int gy = to_px(xmin, yv).second;
        canvas.line(gx, kMargin, gx, kH - kMargin, 225, 225, 225);
        canvas.line(kMargin, gy, kW - kMargin, gy, 225, 225, 225);
        draw_text(canvas, gx - 8, kH - kMargin + 8, fmt_tick(xv));
        draw_text(canvas, 8, gy - 4, fmt_tick(yv));
    }
    canvas.line(kMargin, kH - kMargin, kW - kMargin, kH - kMargin, 30, 30, 30);
    canvas.line(kMargin, kMargin, kMargin, kH - kMargin, 30, 30, 30);

    for (size_t ci = 0; ci < curves.size(); ++ci) {
        const auto& color = kPalette[ci % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const auto& pts = curves[ci].points;
        for (size_t i = 1; i < pts.size(); ++i) {
            auto [x0, y0] = to_px(pts[i - 1].epoch, pts[i - 1].val_metric);
            auto [x1, y1] = to_px(pts[i].epoch, pts[i].val_metric);
            canvas.line(x0, y0, x1, y1, color[0], color[1], color[2]);
        }
        // legend swatch
        const int ly = kMargin + 14 * static_cast<int>(ci);
        canvas.line(kW - kMargin - 40, ly, kW - kMargin - 16, ly, color[0], color[1], color[2]);
    }

    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open plot output: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw IoError("libpng error writing plot " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, kW, kH, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

    std::vector<png_text> texts;
    std::vector<std::string> keys, values;
    keys.push_back("xlabel");
    values.push_back(xlabel);
    keys.push_back("ylabel");
    values.push_back(ylabel);
    for (size_t i = 0; i < curves.size(); ++i) {
        keys.push_back("series" + std::to_string(i));
        values.push_back(curves[i].label);
    }
    texts.resize(keys.size());
    for (size_t i = 0; i < keys.size(); ++i) {
        std::memset(&texts[i], 0, sizeof(png_text));
        texts[i].compression = PNG_TEXT_COMPRESSION_NONE;
        texts[i].key = const_cast<char*>(keys[i].c_str());
        texts[i].text = const_cast<char*>(values[i].c_str());
        texts[i].text_length = values[i].size();
    }
    png_set_text(png, info, texts.data(), static_cast<int>(texts.size()));
    png_write_info(png, info);

    std::vector<png_bytep> rows(kH);
    for (int y = 0; y < kH; ++y) rows[y] = canvas.px.data() + static_cast<size_t>(y) * kW * 3;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

std::map<std::string, std::string> read_png_text(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open PNG: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        std::fclose(fp);
        throw IoError("libpng error reading " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_textp texts = nullptr;
    int count = 0;
    png_get_text(png, info, &texts, &count);
    std::map<std::string, std::string> out;
    for (int i = 0; i < count; ++i) out[texts[i].key] = texts[i].text ? texts[i].text : "";
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return out;
}

}  // namespace dparnet
