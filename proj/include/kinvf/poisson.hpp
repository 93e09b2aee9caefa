#pragma once

#include <memory>
#include <span>
#include <vector>

#include "kinvf/fields.hpp"
#include "kinvf/free_transport.hpp"
#include "kinvf/vector_fields.hpp"

namespace kinvf {

// Sign convention throughout: Delta = -sum d^2/dx_i^2, so Delta phi = source
// means phi = G * source with G = 1/(4 pi |x|), -log|x|/(2 pi), -|x|/2.
struct PoissonResult {
  SpatialField phi;
  SpatialField grad_phi;  // n components
  SpatialField source;
};

// Free-space solver on a fixed box. The Green function is truncated at the
// box diagonal L and convolved spectrally on a periodic grid of period >= D + L,
// which reproduces the free-space potential inside the box.
class PoissonSolver {
 public:
  // boundary_tol: largest |source| allowed on the box edge, relative to max |source|.
  explicit PoissonSolver(SpatialGrid grid, double boundary_tol = 1e-8);

  const SpatialGrid& grid() const { return grid_; }
  // Padded FFT extents.
  std::vector<int> padded_extents() const;
  PoissonResult solve(const SpatialField& source) const;

  struct Plan;  // cached FFT plans and kernel transform

 private:
  SpatialGrid grid_;
  double boundary_tol_;
  std::shared_ptr<const Plan> plan_;
};

PoissonResult solve(const SpatialField& source);

// Fourier transform of the truncated kernel at |k| (dimension n, radius L).
double truncated_kernel_transform(int n, double k, double L);

// -sum d^2/dx_i^2 with the fourth-order grid stencils.
SpatialField negative_laplacian(const SpatialField& psi);

// max |Delta_8 phi - source| / max |source| over nodes at least four layers
// from the edge; Delta_8 is the eighth-order central difference.
double poisson_residual(const PoissonResult& r);

// Right-hand side of Delta(Z^a psi) = sum_b C_b Z^b rho for words over the
// restricted macroscopic fields: (Z_1 + d_1)...(Z_k + d_k) rho with d = 2 for
// the scaling. The distribution form pushes every letter down to f:
// rho((Z_1 + c_1 + d_1)...(Z_k + c_k + d_k) f).
SpatialField commuted_source(const SpatialField& rho, const OperatorWord& word);
SpatialField commuted_source(const DistributionField& f, const OperatorWord& word);

// Interior max of |Delta_h Z^a phi - commuted_source| / max |commuted_source|,
// phi solved from rho.
double commuted_source_residual(const SpatialField& rho, const OperatorWord& word);

struct EllipticLp {
  double direct = 0.0;          // ||Z^a rho(f)||_Lp, stencils on rho
  double via_pushdown = 0.0;    // ||sum_b C_b rho(Z^b f)||_Lp
  double triangle_bound = 0.0;  // sum_b |C_b| ||rho(|Z^b f|)||_Lp
  double holder_bound = 0.0;    // sum_b |C_b| (int chi^-1)^(1/q) ||chi^(1/q) Z^b f||_Lp
  bool outside_hypothesis = false;  // n < 3: the bound's hypothesis fails
};

// p = 1 + delta in (1, 2]; for n >= 3 delta must lie in (0, (n-2)/(n+2)).
// chi(v) = (1+|v|^2)^((delta+n)/2).
EllipticLp elliptic_lp_diagnostic(const DistributionField& f, const OperatorWord& word, double p);

// ||grad phi||_L2 over R^n from the energy identity int phi * source (n = 3).
double gradient_l2_norm(const PoissonResult& r);

// One point per field: (t, ||grad Z^a phi||_L2).
std::vector<SeriesPoint> l2_gradient_decay(std::span<const DistributionField> f_series,
                                           const OperatorWord& word);
std::vector<SeriesPoint> l2_gradient_decay(std::span<const SpatialField> rho_series,
                                           const OperatorWord& word);

// (t, sup_x |grad Z^a phi| (1+t+|x|)^(n/2) t^((n-2)/2)).
std::vector<SeriesPoint> pointwise_field_decay(std::span<const DistributionField> f_series,
                                               const OperatorWord& word);
std::vector<SeriesPoint> pointwise_field_decay(std::span<const SpatialField> rho_series,
                                               const OperatorWord& word);

}  // namespace kinvf
