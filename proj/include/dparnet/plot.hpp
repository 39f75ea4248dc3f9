#ifndef DPARNET_PLOT_HPP
#define DPARNET_PLOT_HPP

#include <map>
#include <string>
#include <vector>

#include "dparnet/checkpoint.hpp"

namespace dparnet {

struct PlotCurve {
    std::string label;
    std::vector<CurvePoint> points;
};

// Overlays the validation metric of each curve against epoch in a static
// PNG. Axis names land in tEXt metadata (xlabel/ylabel) along with one
// seriesN entry per curve.
void render_curves(const std::vector<PlotCurve>& curves, const std::string& path,
                   const std::string& xlabel = "epoch", const std::string& ylabel = "PSNR");

// tEXt key/value pairs of a PNG; used by tests and curious scripts
std::map<std::string, std::string> read_png_text(const std::string& path);

}  // namespace dparnet

#endif
