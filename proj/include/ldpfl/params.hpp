#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ldpfl/common.hpp"

namespace ldpfl {

// One named contiguous slice of the flat parameter storage.
struct LayerShape {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;

    friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Flat, layer-structured vector of model parameters. Immutable after
// construction; all operations are pure functions returning new vectors.
class ParamVector {
   public:
    ParamVector() = default;
    // Shapes must tile [0, values.size()) contiguously and in order.
    ParamVector(std::vector<double> values, std::vector<LayerShape> shapes);

    const std::vector<double>& values() const { return values_; }
    const std::vector<LayerShape>& shapes() const { return shapes_; }
    std::size_t dim() const { return values_.size(); }

    // New vector with the same layer structure and different contents.
    ParamVector with_values(std::vector<double> values) const;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

   private:
    std::vector<double> values_;
    std::vector<LayerShape> shapes_;
};

bool same_shapes(const ParamVector& a, const ParamVector& b);
void require_same_shapes(const ParamVector& a, const ParamVector& b);

ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector sub(const ParamVector& a, const ParamVector& b);
ParamVector scale(const ParamVector& a, double s);
double l2_norm(const ParamVector& a);
double l2_distance(const ParamVector& a, const ParamVector& b);

// Rescales to norm c when the norm exceeds c; exact identity otherwise.
ParamVector clip_norm(const ParamVector& a, double c);

// Coordinate-wise arithmetic mean; summation is left-to-right over the input
// order, which callers keep at ascending client id for reproducibility.
ParamVector mean(const std::vector<ParamVector>& vs);

// Binary container: shape table followed by little-endian float64 payload.
void serialize(const ParamVector& v, std::ostream& out);
ParamVector deserialize(std::istream& in);

}  // namespace ldpfl
