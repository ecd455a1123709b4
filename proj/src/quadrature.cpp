#include "densynth/quadrature.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace densynth {

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
  return v;
}

bool Box::contains(const Eigen::Ref<const VectorXd>& x) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

void gauss_legendre(int order, VectorXd& nodes, VectorXd& weights) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  nodes.resize(order);
  weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev estimate of the i-th root, refined by Newton iteration.
    double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = order * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    nodes[i] = -z;
    nodes[order - 1 - i] = z;
    weights[i] = weights[order - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

std::vector<Box> box_difference(const Box& domain, const Box& excluded) {
  const int n = domain.dim();
  if (excluded.dim() != n)
    throw std::invalid_argument("box_difference: dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (!(domain.lo[i] < excluded.lo[i] && excluded.hi[i] < domain.hi[i]))
      throw std::invalid_argument(
          "box_difference: excluded box must be strictly inside the domain");
  std::vector<Box> out;
  out.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    for (int side = 0; side < 2; ++side) {
      Box b{domain.lo, domain.hi};
      // Axes already peeled are pinned to the excluded range so slabs do not
      // overlap; later axes keep the full domain extent.
      for (int j = 0; j < i; ++j) {
        b.lo[j] = excluded.lo[j];
        b.hi[j] = excluded.hi[j];
      }
      if (side == 0) {
        b.hi[i] = excluded.lo[i];
      } else {
        b.lo[i] = excluded.hi[i];
      }
      out.push_back(std::move(b));
    }
  }
  return out;
}

std::vector<double> graded_edges(double lo, double hi, double inner) {
  std::vector<double> edges = {lo};
  if (inner > 0) {
    // Geometric ladder +-inner*2^k clipped to the interval; resolves the
    // near-singular rational weight concentrated toward the origin.
    const int levels = 5;
    std::vector<double> splits;
    double w = inner;
    for (int k = 0; k < levels; ++k) {
      splits.push_back(w);
      splits.push_back(-w);
      w *= 2.0;
    }
    std::sort(splits.begin(), splits.end());
    for (double s : splits)
      if (s > lo + 1e-12 && s < hi - 1e-12) edges.push_back(s);
  }
  edges.push_back(hi);
  return edges;
}

namespace {

// Walks every quadrature node of the graded tensor rule over domain\excluded
// and invokes fn(x, total_weight).
void for_each_node(const Box& domain, const std::optional<Box>& excluded,
                   int order, const VectorXd& inner,
                   const std::function<void(const VectorXd&, double)>& fn) {
  const int n = domain.dim();
  VectorXd gl_x, gl_w;
  gauss_legendre(order, gl_x, gl_w);

  std::vector<Box> boxes =
      excluded ? box_difference(domain, *excluded) : std::vector<Box>{domain};

  VectorXd x(n);
  for (const Box& box : boxes) {
    if (box.volume() <= 0) continue;
    std::vector<std::vector<double>> edges(n);
    std::vector<int> n_panels(n);
    for (int i = 0; i < n; ++i) {
      edges[i] = graded_edges(box.lo[i], box.hi[i], inner[i]);
      n_panels[i] = static_cast<int>(edges[i].size()) - 1;
    }
    std::vector<int> panel(n, 0);
    while (true) {
      // One tensor cell: product Gauss-Legendre rule.
      std::vector<int> node(n, 0);
      VectorXd mid(n), half(n);
      for (int i = 0; i < n; ++i) {
        mid[i] = 0.5 * (edges[i][panel[i]] + edges[i][panel[i] + 1]);
        half[i] = 0.5 * (edges[i][panel[i] + 1] - edges[i][panel[i]]);
      }
      while (true) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
          x[i] = mid[i] + half[i] * gl_x[node[i]];
          w *= half[i] * gl_w[node[i]];
        }
        fn(x, w);
        int i = 0;
        for (; i < n; ++i) {
          if (++node[i] < order) break;
          node[i] = 0;
        }
        if (i == n) break;
      }
      int i = 0;
      for (; i < n; ++i) {
        if (++panel[i] < n_panels[i]) break;
        panel[i] = 0;
      }
      if (i == n) break;
    }
  }
}

VectorXd grading_widths(const std::optional<Box>& excluded, int n, bool active) {
  VectorXd inner = VectorXd::Zero(n);
  if (excluded && active)
    for (int i = 0; i < n; ++i)
      inner[i] = 0.5 * (excluded->hi[i] - excluded->lo[i]);
  return inner;
}

}  // namespace

VectorXd quadrature_moments(const BasisDictionary& dict, const Poly& weight,
                            const Poly& b, int alpha, const Box& domain,
                            const std::optional<Box>& excluded) {
  if (alpha < 0) throw std::invalid_argument("quadrature_moments: alpha must be >= 0");
  const int n = dict.n_vars();
  if (domain.dim() != n)
    throw std::invalid_argument("quadrature_moments: domain dimension mismatch");
  const int order = static_cast<int>(
      std::ceil((weight.degree() + dict.max_degree() + alpha * b.degree()) / 2.0)) + 8;
  const bool rational = alpha > 0 && b.degree() > 0;
  const VectorXd inner = grading_widths(excluded, n, rational);

  VectorXd moments = VectorXd::Zero(dict.size());
  VectorXd psi;
  for_each_node(domain, excluded, order, inner, [&](const VectorXd& x, double w) {
    double denom = 1.0;
    if (alpha > 0) {
      const double bv = b.eval(x);
      if (!(bv > 0))
        throw std::domain_error("quadrature_moments: weight is singular (b <= 0 at a node)");
      denom = std::pow(bv, alpha);
    }
    dict.eval(x, psi);
    moments.noalias() += (w * weight.eval(x) / denom) * psi;
  });
  return moments;
}

double integrate_ratio(const Poly& num, const Poly& b, int alpha,
                       const Box& domain, const std::optional<Box>& excluded) {
  if (alpha < 0) throw std::invalid_argument("integrate_ratio: alpha must be >= 0");
  const int order = static_cast<int>(
      std::ceil((num.degree() + alpha * b.degree()) / 2.0)) + 8;
  const bool rational = alpha > 0 && b.degree() > 0;
  const VectorXd inner = grading_widths(excluded, num.n_vars(), rational);

  double acc = 0.0;
  for_each_node(domain, excluded, order, inner, [&](const VectorXd& x, double w) {
    double denom = 1.0;
    if (alpha > 0) {
      const double bv = b.eval(x);
      if (!(bv > 0))
        throw std::domain_error("integrate_ratio: weight is singular (b <= 0 at a node)");
      denom = std::pow(bv, alpha);
    }
    acc += w * num.eval(x) / denom;
  });
  return acc;
}

}  // namespace densynth
