#pragma once

#include "perfhom/geometry.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace perfhom {

/// Symmetric 2x2 tensor stored as (a11, a12, a22).
struct Tensor2 {
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;

    double min_eigenvalue() const;
    double max_eigenvalue() const;
};

/// Element-wise symmetric coefficient tensor a_ij(y) with a certified
/// ellipticity constant. Immutable once built.
struct CoefficientField {
    std::vector<Tensor2> values; // per triangle
    double alpha = 0.0;          // certified lower ellipticity bound
    std::string preset;

    void validate(int triangle_count) const;
};

/// Element-wise scalar density rho(y) with its exact cell average.
struct DensityField {
    std::vector<double> values; // per triangle
    double average = 0.0;       // M_{Y*}(rho), exact sum of element contributions
    std::string preset;
};

// presets: "identity"  -> Id on every element, alpha = 1
//          "layered"   -> (2 + cos 2*pi*y1) Id sampled at the midpoint of the
//                         element's y1-extent, alpha = min over elements
CoefficientField preset_coefficients(const std::string& name, const CellMesh& mesh);
CoefficientField preset_coefficients(const std::string& name, const DomainMesh& mesh);

// cases: "positive_avg" (+2 / -1 split at y1 = 1/2), "zero_avg" (+1 / -1),
//        "negative_avg" (= -positive_avg). The split line must be a mesh line.
DensityField preset_density(const std::string& density_case, const CellMesh& mesh);
DensityField preset_density(const std::string& density_case, const DomainMesh& mesh);

DensityField negate(const DensityField& d);

struct SignedAreas {
    double positive_area = 0.0;
    double negative_area = 0.0;
};

/// Areas of {rho > 0} and {rho < 0}; throws if either vanishes (the density
/// is then sign-definite and the problem is standard).
SignedAreas validate_indefinite(const DensityField& d, const std::vector<double>& areas);

// custom fields from a text table `elem_index value(s)` (1 value: density,
// 3 values: tensor a11 a12 a22)
CoefficientField load_coefficients(std::istream& is, int triangle_count);
DensityField load_density(std::istream& is, int triangle_count, const std::vector<double>& areas);

// transfer of cell element data onto an aligned domain mesh (exact reuse,
// no re-evaluation)
CoefficientField transfer_to_domain(const CoefficientField& cell_field, const DomainMesh& mesh);
DensityField transfer_to_domain(const DensityField& cell_field, const DomainMesh& mesh);

} // namespace perfhom
