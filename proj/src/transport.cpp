#include "oldroyd/transport.hpp"

#include <cmath>
#include <sstream>

namespace oldroyd {

namespace {

/// Velocity at an arbitrary point, walking from the hint element. The hint is
/// updated so consecutive evaluations along a trajectory stay cheap.
Vec2 eval_at_point(const Mesh& m, const VelocityEvaluator& u, const Vec2& x, int& hint) {
  const Mesh::Location loc = m.locate(x, hint);
  hint = loc.element;
  return u.value(m, loc.element, loc.bary);
}

}  // namespace

CharacteristicFeet integrate_backward_flow(const Mesh& m, const VelocityEvaluator& u,
                                           const std::vector<Vec2>& points,
                                           const std::vector<int>& hints, double dt,
                                           int substeps) {
  if (!(dt > 0.0) || substeps < 1)
    throw TransportError("backward flow requires dt > 0 and substeps >= 1");
  CharacteristicFeet out;
  out.feet.resize(points.size());
  const double h = dt / substeps;
  for (std::size_t p = 0; p < points.size(); ++p) {
    Vec2 x = points[p];
    int hint = hints.empty() ? 0 : hints[p];
    try {
      for (int s = 0; s < substeps; ++s) {
        // One RK4 step of dX/dt = u(X) backwards in time.
        const Vec2 k1 = eval_at_point(m, u, x, hint);
        const Vec2 k2 = eval_at_point(m, u, x - k1 * (0.5 * h), hint);
        const Vec2 k3 = eval_at_point(m, u, x - k2 * (0.5 * h), hint);
        const Vec2 k4 = eval_at_point(m, u, x - k3 * h, hint);
        x = x - (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
      }
      const Mesh::Location loc = m.locate(x, hint);
      out.feet[p] = {m.point(loc.element, loc.bary), loc.element, loc.bary};
    } catch (const LocationError& e) {
      std::ostringstream os;
      os << "characteristic foot left the domain (point " << p
         << "): " << e.what();
      throw TransportError(os.str());
    }
  }
  return out;
}

std::vector<SymMat> pullback_field(const Mesh& m, const SymTensorField& f,
                                   const CharacteristicFeet& feet) {
  std::vector<SymMat> out(feet.feet.size());
  for (std::size_t p = 0; p < feet.feet.size(); ++p) {
    const auto& foot = feet.feet[p];
    out[p] = f.value(m, foot.element, foot.bary);
  }
  return out;
}

EdgeUpwindData build_edge_upwind(const Mesh& m, const VelocityEvaluator& u,
                                 int edge_points) {
  const EdgeRule& rule = edge_quadrature(edge_points);
  EdgeUpwindData data;
  data.edges.resize(m.num_edges());
  for (int j = 0; j < m.num_edges(); ++j) {
    const Edge& e = m.edge(j);
    if (e.on_boundary()) continue;
    const double len = m.edge_length(j);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double s = rule.points[q];
      const Vec2 x = m.vertex(e.v0) * (1.0 - s) + m.vertex(e.v1) * s;
      const double un_left = u.value(m, e.left, m.barycentric(e.left, x)).dot(e.normal);
      const double un_right =
          u.value(m, e.right, m.barycentric(e.right, x)).dot(e.normal);
      if (std::abs(un_left - un_right) > 1e-10) {
        std::ostringstream os;
        os << "multivalued normal trace on edge " << j << ": jump "
           << un_left - un_right;
        throw ContractViolation(os.str());
      }
      const double un = 0.5 * (un_left + un_right);
      if (un == 0.0) continue;
      EdgeUpwindData::Point pt;
      pt.s = s;
      pt.weight = rule.weights[q] * len;
      pt.abs_un = std::abs(un);
      // The normal points from `left` into `right`.
      if (un > 0.0) {
        pt.upstream = e.left;
        pt.downstream = e.right;
      } else {
        pt.upstream = e.right;
        pt.downstream = e.left;
      }
      data.edges[j].push_back(pt);
    }
  }
  return data;
}

}  // namespace oldroyd
