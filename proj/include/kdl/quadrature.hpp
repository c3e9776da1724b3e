#pragma once

#include <functional>
#include <vector>

#include "kdl/vec.hpp"

namespace kdl {

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1], ascending, exactly antisymmetric
  std::vector<double> weights;  // exactly symmetric
};

// n-point Gauss-Legendre rule (Newton iteration on P_n). Nodes are mirrored
// so that x_{n-1-i} == -x_i bitwise; odd integrands then cancel to rounding.
const GaussLegendre& gauss_legendre(int n);

// Composite Gauss-Legendre integral of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 16,
                 int order = 20);

// Tensor-product Gauss-Legendre rule on the cube [-half_width, half_width]^dim.
struct CubeNode {
  Vec point;
  double weight;
};
std::vector<CubeNode> cube_rule(int dim, double half_width, int nodes_per_axis);

// Surface area of the unit sphere S^{dim-1}; radial integrals use
// \int f(|x|) dx = sphere_area(d) \int_0^\infty f(r) r^{d-1} dr.
double sphere_area(int dim);

// Volume of the d-ball of radius r.
double ball_volume(int dim, double r);

}  // namespace kdl
