#pragma once

// Tensor Gauss-Legendre quadrature over axis-aligned boxes, with the excluded
// neighbourhood removed by an exact half-slab decomposition.  Moment vectors
// integrate weight * psi_k / b^alpha; because b vanishes inside the excluded
// box, each slab is further split into geometrically graded panels toward the
// origin so the fixed-order rule resolves the near-singular rational weight.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "densynth/basis.hpp"
#include "densynth/poly.hpp"

namespace densynth {

struct Box {
  VectorXd lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const Eigen::Ref<const VectorXd>& x) const;
};

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int order, VectorXd& nodes, VectorXd& weights);

// Exact cover of domain \ excluded by 2n boxes (one axis peeled at a time).
// The excluded box must lie strictly inside the domain on every axis.
std::vector<Box> box_difference(const Box& domain, const Box& excluded);

// Panel edges for one axis interval, graded geometrically away from zero with
// base width `inner`; a non-positive `inner` yields the single panel [lo, hi].
std::vector<double> graded_edges(double lo, double hi, double inner);

// moments[k] = integral over domain \ excluded of weight * psi_k / b^alpha.
// alpha = 0 with b == 1 integrates plain weighted moments.  Throws when b
// evaluates to <= 0 at any quadrature node (singular weight).
VectorXd quadrature_moments(const BasisDictionary& dict, const Poly& weight,
                            const Poly& b, int alpha, const Box& domain,
                            const std::optional<Box>& excluded);

// Integral over domain \ excluded of num / b^alpha (same node layout).
double integrate_ratio(const Poly& num, const Poly& b, int alpha,
                       const Box& domain, const std::optional<Box>& excluded);

}  // namespace densynth
