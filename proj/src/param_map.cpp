#include "dparnet/param_map.hpp"

#include <cstring>
#include <fstream>

#include "dparnet/errors.hpp"

namespace dparnet {

const char* kind_name(DegradationKind k) {
    return k == DegradationKind::turbulence ? "turbulence" : "noise";
}

DegradationKind kind_from_name(const std::string& name) {
    if (name == "turbulence") return DegradationKind::turbulence;
    if (name == "noise") return DegradationKind::noise;
    throw ConfigError("unknown degradation kind: " + name);
}

double default_phys_max(DegradationKind k) {
    return k == DegradationKind::turbulence ? 6e-12 : 100.0;
}

namespace {

// this code assumes a little-endian host; all supported targets are
template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void write_parammap(const ParamMap& map, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open PMAP for writing: " + path);
    f.write("PMAP", 4);
    put<uint8_t>(f, 1);
    put<uint8_t>(f, static_cast<uint8_t>(map.kind));
    put<uint8_t>(f, 0);
    put<uint8_t>(f, 0);
    put<double>(f, map.phys_max);
    put<uint32_t>(f, static_cast<uint32_t>(map.h));
    put<uint32_t>(f, static_cast<uint32_t>(map.w));
    f.write(reinterpret_cast<const char*>(map.values.data()),
            static_cast<std::streamsize>(map.values.size() * sizeof(float)));
    if (!f) throw IoError("short write to PMAP file: " + path);
}

ParamMap read_parammap(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open PMAP for reading: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "PMAP", 4) != 0)
        throw FormatError("bad magic in " + path + ", expected \"PMAP\"");
    const auto version = get<uint8_t>(f);
    if (version != 1)
        throw FormatError("unsupported PMAP version " + std::to_string(version) + " in " + path);
    const auto kind_byte = get<uint8_t>(f);
    if (kind_byte > 1) throw FormatError("bad kind byte in " + path);
    get<uint8_t>(f);
    get<uint8_t>(f);

    ParamMap map;
    map.kind = static_cast<DegradationKind>(kind_byte);
    map.phys_max = get<double>(f);
    map.h = static_cast<int>(get<uint32_t>(f));
    map.w = static_cast<int>(get<uint32_t>(f));
    if (!f || map.h <= 0 || map.w <= 0)
        throw FormatError("bad PMAP header dimensions in " + path);

    map.values.resize(static_cast<size_t>(map.h) * map.w);
    f.read(reinterpret_cast<char*>(map.values.data()),
           static_cast<std::streamsize>(map.values.size() * sizeof(float)));
    if (static_cast<size_t>(f.gcount()) != map.values.size() * sizeof(float))
        throw FormatError("PMAP payload shorter than header dimensions in " + path);
    for (float v : map.values)
        if (!(v >= 0.0f && v <= 1.0f))
            throw FormatError("PMAP value out of [0,1] in " + path);
    return map;
}

}  // namespace dparnet
