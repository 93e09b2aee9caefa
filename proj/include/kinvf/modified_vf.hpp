#pragma once

#include <functional>
#include <vector>

#include "kinvf/fields.hpp"
#include "kinvf/free_transport.hpp"
#include "kinvf/vector_fields.hpp"
#include "kinvf/vlasov_poisson.hpp"

namespace kinvf {

// Y = Z - sum_k c^k d/dx^k for Z in {U_i, R_ij, S, ST}, with
//   T_phi(c^k) = mu t d/dx^k [Z phi]   (S: Z phi - 2 phi),  c^k(0) = 0.
// Z on the right is macroscopic. Translations are not modified.

// Microscopic fields that carry coefficients, in catalogue order.
std::vector<FieldId> modified_fields(int dim, bool include_space_time = true);

struct CoefficientSet {
  std::vector<FieldId> fields;
  std::vector<std::vector<DistributionField>> values;  // values[field][k], k < dim
  double time = 0.0;

  // All coefficients zero; fields defaults to modified_fields(dim).
  static CoefficientSet zero(const PhaseGrid& grid, double time, std::vector<FieldId> fields = {});

  int dim() const;
  // Coefficients of z; nullptr for translations. Throws if z is missing.
  const std::vector<DistributionField>* find(const FieldId& z) const;
};

// Potential data at one instant. dt_phi is only needed for the space-time scaling.
struct PotentialSample {
  SpatialField phi;
  SpatialField grad_phi;  // n components
  SpatialField dt_phi;    // empty unless available
};

// mu t d/dx^k [Z phi] for each field and k, t = phi.time(). Throws
// std::invalid_argument for the space-time scaling without dt_phi.
std::vector<std::vector<SpatialField>> coefficient_sources(const std::vector<FieldId>& fields,
                                                           const SpatialField& phi, int mu,
                                                           const SpatialField* dt_phi = nullptr);

// j = int v f dv, n components.
SpatialField current_density(const DistributionField& f);
// d_t phi from d_t rho = -div j:  Delta (d_t phi) = -div j.
SpatialField potential_rate(const SpatialField& current);

// One Strang step of T_phi(c) = source(x) (T when field_on is false, source
// may be null) with grad phi and the source frozen at the midpoint.
DistributionField step_transported(const DistributionField& c, const SpatialField& grad_phi_mid,
                                    const SpatialField* source, double dt, int mu,
                                    bool field_on = true);

// step_transported for every coefficient, sources from the midpoint potential.
CoefficientSet step_coefficients(const CoefficientSet& c, const PotentialSample& mid, double dt,
                                 int mu, bool field_on = true);

using PotentialFn = std::function<PotentialSample(double t)>;
using CoefficientMonitor = std::function<void(const CoefficientSet&)>;

// Coefficients under a prescribed potential (manufactured solutions).
CoefficientSet evolve_coefficients(CoefficientSet c, const PotentialFn& potential, double t_end,
                                   double dt, int mu, double sample_every,
                                   const CoefficientMonitor& monitor);

using CoupledMonitor = std::function<void(const VPState&, const CoefficientSet&)>;

// Vlasov-Poisson with the coefficients advanced in lockstep; c must match s.time.
// Same cadence as evolve.
VPState evolve_with_coefficients(VPState s, CoefficientSet& c, double t_end, double dt,
                                 double sample_every, const CoupledMonitor& monitor,
                                 const VPOptions& opt = {});

// Y^word f. Words with d/dt or the space-time scaling are rejected (their
// modified form needs d_t of f and of the coefficients).
DistributionField apply_modified(const OperatorWord& word, const CoefficientSet& c,
                                 const DistributionField& f);

// norm_E with Z replaced by Y.
NormReport modified_norm_E(const DistributionField& f, const CoefficientSet& c, int N, double delta);

// d_t g = -v.grad_x g - mu grad phi . grad_v g by stencils.
DistributionField transport_time_derivative(const DistributionField& g, const SpatialField& phi,
                                            int mu);

struct CommutationData {
  DistributionField g;
  DistributionField dt_g;
  SpatialField phi;
  std::vector<DistributionField> coeff;     // Phi^k_i, k < n
  std::vector<DistributionField> dt_coeff;  // d_t Phi^k_i
};

struct CommutationResidual {
  double t = 0.0;
  double lhs = 0.0;       // ||[T_phi, Y_i] g||_L1
  double rhs = 0.0;       // ||-mu sum d_j Z_i phi Z_j g + mu sum Phi^j_i d_j grad phi . grad_v g||_L1
  double residual = 0.0;  // ||lhs - rhs||_L1
  // Same with Y_i replaced by Z_i: the residual is then the term
  // mu sum_j d_j(Z_i phi) t d_j g.
  double uncorrected_residual = 0.0;
  double bad_term = 0.0;           // ||mu sum_j d_j(Z_i phi) t d_j g||_L1
  double bad_term_mismatch = 0.0;  // ||(uncorrected lhs - rhs) - bad term|| / ||bad term||
};

// [T_phi, Y_i] g by stencils against its closed form; i is 0-based.
CommutationResidual improved_commutation_residual(const CommutationData& d, int i, int mu);

// Self-consistent run with Phi_i evolved. At each sample time t > 0 the
// coefficient rate is the centred difference of the evolved Phi over +-dt and
// d_t f comes from the equation.
std::vector<CommutationResidual> improved_commutation_series(VPState s, int i, double t_end,
                                                             double dt, double sample_every,
                                                             const VPOptions& opt = {});

// sup_x (1+t+|x|)^n rho(|Y^word f|)(t, x).
double modified_ks_value(const DistributionField& f, const CoefficientSet& c,
                         const OperatorWord& word);

// n = 3 free-transport probe: the coefficients vanish, so Y = Z.
DecaySeries modified_ks_decay(const ProductFreeSolution& sol, const OperatorWord& word,
                              std::span<const double> times);

// sup |c^k_z| and sup |d/dx^i c^k_z| over the grid.
double coefficient_sup(const CoefficientSet& c, const FieldId& z, int k);
double coefficient_gradient_sup(const CoefficientSet& c, const FieldId& z, int k, int i);

}  // namespace kinvf
