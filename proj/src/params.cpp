#include "ldpfl/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <utility>

namespace ldpfl {

namespace {

void require_finite(const std::vector<double>& values, const char* op) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw numeric_error(std::string(op) + ": non-finite input entry");
        }
    }
}

}  // namespace

ParamVector::ParamVector(std::vector<double> values,
                         std::vector<LayerShape> shapes)
    : values_(std::move(values)), shapes_(std::move(shapes)) {
    std::size_t expected_offset = 0;
    for (const auto& s : shapes_) {
        if (s.offset != expected_offset) {
            throw shape_error("ParamVector: layer '" + s.name +
                              "' is not contiguous with its predecessor");
        }
        expected_offset += s.length;
    }
    if (expected_offset != values_.size()) {
        throw shape_error("ParamVector: layer lengths sum to " +
                          std::to_string(expected_offset) + " but storage has " +
                          std::to_string(values_.size()) + " entries");
    }
}

ParamVector ParamVector::with_values(std::vector<double> values) const {
    return ParamVector(std::move(values), shapes_);
}

bool same_shapes(const ParamVector& a, const ParamVector& b) {
    return a.shapes() == b.shapes();
}

void require_same_shapes(const ParamVector& a, const ParamVector& b) {
    if (!same_shapes(a, b)) {
        throw shape_error("parameter vectors have different layer structure");
    }
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
    require_same_shapes(a, b);
    require_finite(a.values(), "add");
    require_finite(b.values(), "add");
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.values()[i] + b.values()[i];
    }
    return a.with_values(std::move(out));
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
    require_same_shapes(a, b);
    require_finite(a.values(), "sub");
    require_finite(b.values(), "sub");
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.values()[i] - b.values()[i];
    }
    return a.with_values(std::move(out));
}

ParamVector scale(const ParamVector& a, double s) {
    require_finite(a.values(), "scale");
    if (!std::isfinite(s)) throw numeric_error("scale: non-finite factor");
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.values()[i] * s;
    }
    return a.with_values(std::move(out));
}

double l2_norm(const ParamVector& a) {
    double sum = 0.0;
    for (double v : a.values()) sum += v * v;
    return std::sqrt(sum);
}

double l2_distance(const ParamVector& a, const ParamVector& b) {
    require_same_shapes(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

ParamVector clip_norm(const ParamVector& a, double c) {
    if (!(c > 0.0)) throw config_error("clip_norm: bound must be positive");
    require_finite(a.values(), "clip_norm");
    const double norm = l2_norm(a);
    if (norm <= c) return a;
    return scale(a, c / norm);
}

ParamVector mean(const std::vector<ParamVector>& vs) {
    if (vs.empty()) throw usage_error("mean: empty input list");
    std::vector<double> sum(vs.front().dim(), 0.0);
    for (const auto& v : vs) {
        require_same_shapes(vs.front(), v);
        require_finite(v.values(), "mean");
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v.values()[i];
    }
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (double& s : sum) s *= inv;
    return vs.front().with_values(std::move(sum));
}

namespace {

constexpr char kMagic[4] = {'L', 'P', 'V', '1'};

template <typename T>
void write_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw ingest_error("ParamVector: truncated stream");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void serialize(const ParamVector& v, std::ostream& out) {
    out.write(kMagic, 4);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.shapes().size()));
    for (const auto& s : v.shapes()) {
        write_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.name.size()));
        out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
        write_le<std::uint64_t>(out, s.offset);
        write_le<std::uint64_t>(out, s.length);
    }
    write_le<std::uint64_t>(out, v.dim());
    for (double x : v.values()) write_le<double>(out, x);
}

ParamVector deserialize(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw ingest_error("ParamVector: bad magic at byte offset 0");
    }
    const auto n_layers = read_le<std::uint32_t>(in);
    std::vector<LayerShape> shapes(n_layers);
    for (auto& s : shapes) {
        const auto name_len = read_le<std::uint16_t>(in);
        s.name.resize(name_len);
        in.read(s.name.data(), name_len);
        if (!in) throw ingest_error("ParamVector: truncated layer name");
        s.offset = read_le<std::uint64_t>(in);
        s.length = read_le<std::uint64_t>(in);
    }
    const auto dim = read_le<std::uint64_t>(in);
    std::vector<double> values(dim);
    for (auto& x : values) x = read_le<double>(in);
    return ParamVector(std::move(values), std::move(shapes));
}

}  // namespace ldpfl
