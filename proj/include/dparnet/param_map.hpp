#ifndef DPARNET_PARAM_MAP_HPP
#define DPARNET_PARAM_MAP_HPP

#include <string>
#include <vector>

namespace dparnet {

enum class DegradationKind { turbulence = 0, noise = 1 };

const char* kind_name(DegradationKind k);
DegradationKind kind_from_name(const std::string& name);

// Physical ceilings of the normalized parameter value: Cn^2 up to 6e-12
// for turbulence, sigma_n up to 100 (0-255 intensity scale) for noise.
double default_phys_max(DegradationKind k);

// Per-pixel degradation parameter matrix, one static map per sequence.
// Values are kept in f32 so the PMAP file round trip is bit-exact.
struct ParamMap {
    int h = 0;
    int w = 0;
    DegradationKind kind = DegradationKind::noise;
    double phys_max = 100.0;
    std::vector<float> values;  // row-major, in [0,1]

    ParamMap() = default;
    ParamMap(int h_, int w_, DegradationKind k, double pm, float fill = 0.0f)
        : h(h_), w(w_), kind(k), phys_max(pm),
          values(static_cast<size_t>(h_) * w_, fill) {}

    float& at(int y, int x) { return values[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return values[static_cast<size_t>(y) * w + x]; }
    double phys(int y, int x) const { return static_cast<double>(at(y, x)) * phys_max; }
};

// PMAP binary format:
//   bytes 0-3   magic "PMAP"
//   byte  4     version = 1
//   byte  5     kind (0 = turbulence, 1 = noise)
//   bytes 6-7   reserved, zero
//   bytes 8-15  phys_max, little-endian f64
//   bytes 16-19 H, bytes 20-23 W, little-endian u32
//   then H*W little-endian f32, row-major
ParamMap read_parammap(const std::string& path);
void write_parammap(const ParamMap& map, const std::string& path);

}  // namespace dparnet

#endif
