#pragma once

#include "perfhom/assembly.hpp"
#include "perfhom/geometry.hpp"
#include "perfhom/materials.hpp"
#include "perfhom/pencil.hpp"

#include <memory>
#include <optional>
#include <string>

namespace perfhom {

enum class Regime { MPos, MZero, MNeg };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);

/// First negative eigencouple of the local cell spectral problem, with the
/// eigenfunction sign-fixed positive and scaled to int_{Y*} theta^2 = |Y*|.
struct LocalSpectrum {
    double lambda1neg = 0.0;
    Vec theta; // dof vector on the periodic (no mean-zero) dofmap
    double int_rho_theta2 = 0.0;
};

/// Everything the limit problems consume, computed once per cell model.
struct HomogenizedModel {
    Regime regime = Regime::MPos;
    std::shared_ptr<const CellMesh> mesh;
    std::shared_ptr<const DofMap> dofmap; // periodic, replicas identified
    CoefficientField coeff;
    DensityField density;

    Tensor2 q;
    Vec chi1, chi2;       // cell correctors (dof vectors, mean zero)
    double M = 0.0;       // M_{Y*}(rho)

    // M = 0 regime
    std::optional<Vec> chi0;
    std::optional<double> nu2;

    // M > 0 regime
    std::optional<double> lambda1neg;
    std::optional<Vec> theta1neg;
    std::optional<CoefficientField> a_tilde;
    std::optional<DensityField> rho_tilde;
    std::optional<Tensor2> q_tilde;
    std::optional<Vec> chi_tilde1, chi_tilde2;
    std::optional<double> M_tilde;

    std::string to_json() const;
    std::uint64_t hash() const; // FNV-1a of the serialized document
};

/// chi^j solving a(chi, v) = l_j(v) on the periodic mean-zero space, j in {1,2}.
Vec solve_cell_corrector(const CellMesh& mesh, const CoefficientField& coeff, int j);

/// chi^0 solving a(chi, v) = int rho v; requires the compatibility M = 0.
Vec solve_cell_corrector_rho(const CellMesh& mesh, const CoefficientField& coeff,
                             const DensityField& density);

/// q_ij = int a_ij - sum_l int a_il d_l chi^j, symmetrized; throws when the
/// computed asymmetry exceeds 1e-9. `asymmetry_out` receives |q12 - q21| of
/// the two independently computed off-diagonal routes.
Tensor2 homogenized_tensor(const CellMesh& mesh, const CoefficientField& coeff,
                           const Vec& chi1, const Vec& chi2, double* asymmetry_out = nullptr);

/// Energy-form route q_ij = sum int a D(y_i - chi^i) . D(y_j - chi^j); equals
/// homogenized_tensor in exact arithmetic and serves as a consistency oracle.
Tensor2 energy_tensor(const CellMesh& mesh, const CoefficientField& coeff,
                      const Vec& chi1, const Vec& chi2);

/// nu^2 = a(chi0, chi0); also verifies int rho chi0 = nu^2 to rel 1e-8 and
/// refuses nonpositive results.
double nu_squared(const CellMesh& mesh, const CoefficientField& coeff, const Vec& chi0,
                  const DensityField& density);

LocalSpectrum local_spectrum(const CellMesh& mesh, const CoefficientField& coeff,
                             const DensityField& density);

struct WeightedCellData {
    CoefficientField a_tilde;
    DensityField rho_tilde;
    Vec chi_tilde1, chi_tilde2;
    Tensor2 q_tilde;
    double M_tilde = 0.0;
};
WeightedCellData weighted_cell_data(const CellMesh& mesh, const CoefficientField& coeff,
                                    const DensityField& density, const Vec& theta);

/// Per-element exact averages of the squared P1 interpolant of a vertex field.
std::vector<double> element_squared_average(const CellMesh& mesh, const DofMap& dofmap,
                                            const Vec& dof_values);

HomogenizedModel build_homogenized_model(const CellGeometry& geom, const std::string& coeff_preset,
                                         const std::string& density_case);
HomogenizedModel build_homogenized_model(std::shared_ptr<const CellMesh> mesh,
                                         CoefficientField coeff, DensityField density);

/// vertex values of a dof vector (Dirichlet-eliminated vertices read as zero)
Vec vertex_values(const DofMap& dofmap, const Vec& dof_values);

} // namespace perfhom
