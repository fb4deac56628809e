#pragma once

#include <cstdint>
#include <vector>

#include "dynamics/dynamics.hpp"
#include "dynamics/expansion.hpp"

namespace qk {

/// |sum_P (-1)^{|P|-1}(|P|-1)! - [m == 1]| over the partitions of an m-set.
long long mobius_orthogonality_defect(int m);

/// max over probes of || A_{1+n}(0,{Y},X\Y) f - [n == 0] f ||_1, {Y} = 1..s.
double cumulant_zero_time_residual(const Dynamics& dyn, int s, int n,
                                   const std::vector<LabeledOperator>& probes);

/// max over probes of || sum_P prod_{X in P} A_{|X|}(-t, X) f - G_{s+n}(-t) f ||_1.
double cluster_inversion_residual(const Dynamics& dyn, int s, int n, double t,
                                  const std::vector<LabeledOperator>& probes);

/// Recurrence against closed form after tracing out the added labels, on
/// fully exchange-symmetric probes.
double traced_closed_form_residual(const GeneratedEvolution& gen, double t, int s, int n,
                                   std::uint64_t seed);

/// max over probes of || G(t) G(-t) f - f ||_1 (sign convention guard).
double round_trip_residual(const Dynamics& dyn, double t,
                           const std::vector<LabeledOperator>& probes);

}  // namespace qk
