#pragma once

#include <memory>
#include <vector>

#include "oldroyd/fields.hpp"

namespace oldroyd {

/// Velocity field restored to (at least elementwise) incompressibility by one
/// of the three projection operators. All three representations have a
/// single-valued normal component on every internal edge.
class ProjectedVelocity final : public VelocityEvaluator {
 public:
  enum class Kind {
    CurlPotential,  ///< curl of a continuous P1 potential; piecewise constant,
                    ///  pointwise divergence-free
    RT0,            ///< lowest-order Raviart-Thomas, one normal flux per edge
    BDM1,           ///< Brezzi-Douglas-Marini, linear normal trace per edge
  };

  Kind kind() const { return kind_; }

  Vec2 value(const Mesh& m, int k, const std::array<double, 3>& bary) const override;
  Mat2 gradient(const Mesh& m, int k, const std::array<double, 3>& bary) const override;
  bool single_valued_normal() const override { return true; }

  /// div of the representation inside element k (exact, from coefficients).
  double element_divergence(const Mesh& m, int k) const;

  /// Coefficients: potential values (CurlPotential, per vertex), normal fluxes
  /// (RT0, per edge), or per-element [a1..a6] for (a1+a2x+a3y, a4+a5x+a6y).
  const std::vector<double>& coefficients() const { return coeff_; }

  static ProjectedVelocity curl_potential(std::vector<double> potential);
  static ProjectedVelocity rt0(std::vector<double> fluxes);
  static ProjectedVelocity bdm1(std::vector<double> element_coeffs);

 private:
  Kind kind_;
  std::vector<double> coeff_;
};

/// L2-orthogonal projection onto curls of continuous P1 potentials vanishing
/// on the boundary: solves one global Poisson problem, output is solenoidal
/// for arbitrary input.
ProjectedVelocity project_rot(const Mesh& m, const VelocityEvaluator& u);

/// Raviart-Thomas interpolation from per-edge normal fluxes; preserves the
/// elementwise divergence integral of the input. Elementwise computation.
ProjectedVelocity project_rt0(const Mesh& m, const VelocityEvaluator& u);

/// Brezzi-Douglas-Marini interpolation matching two normal-trace moments per
/// edge; same divergence preservation as RT0, reproduces affine fields.
ProjectedVelocity project_bdm(const Mesh& m, const VelocityEvaluator& u);

}  // namespace oldroyd
