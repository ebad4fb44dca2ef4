#include "oldroyd/spaces.hpp"

#include <cmath>

namespace oldroyd {

const char* family_name(Family f) {
  switch (f) {
    case Family::P2Vector: return "P2-vector";
    case Family::P1: return "P1";
    case Family::P1Disc: return "P1disc";
    case Family::P0: return "P0";
    case Family::CRVector: return "P1CR-vector";
    case Family::P0Tensor: return "P0-tensor";
    case Family::P1DiscTensor: return "P1disc-tensor";
    case Family::P1PlusP0Tensor: return "P1plusP0-tensor";
  }
  return "?";
}

bool is_tensor_family(Family f) {
  return f == Family::P0Tensor || f == Family::P1DiscTensor ||
         f == Family::P1PlusP0Tensor;
}

DofMap build_dof_map(const Mesh& m, const SpaceSpec& s) {
  DofMap d;
  d.space = s;
  const int nt = m.num_triangles();
  auto vertex_nodes = [&] {
    d.num_nodes = m.num_vertices();
    d.nodes_per_element = 3;
    d.element_nodes.resize(nt * 3);
    for (int k = 0; k < nt; ++k)
      for (int i = 0; i < 3; ++i) d.element_nodes[3 * k + i] = m.tri(k)[i];
    d.nodes.resize(d.num_nodes);
    for (int v = 0; v < m.num_vertices(); ++v)
      d.nodes[v] = {DofMap::Anchor::Vertex, v, m.vertex(v)};
  };
  auto element_linear_nodes = [&] {
    d.num_nodes = 3 * nt;
    d.nodes_per_element = 3;
    d.element_nodes.resize(nt * 3);
    d.nodes.resize(d.num_nodes);
    for (int k = 0; k < nt; ++k)
      for (int i = 0; i < 3; ++i) {
        d.element_nodes[3 * k + i] = 3 * k + i;
        d.nodes[3 * k + i] = {DofMap::Anchor::Vertex, m.tri(k)[i],
                              m.vertex(m.tri(k)[i])};
      }
  };
  auto element_nodes = [&] {
    d.num_nodes = nt;
    d.nodes_per_element = 1;
    d.element_nodes.resize(nt);
    d.nodes.resize(nt);
    for (int k = 0; k < nt; ++k) {
      d.element_nodes[k] = k;
      d.nodes[k] = {DofMap::Anchor::Element, k, m.barycenter(k)};
    }
  };

  switch (s.family) {
    case Family::P2Vector: {
      if (s.components != 2) throw ConfigError("P2-vector requires 2 components");
      d.num_nodes = m.num_vertices() + m.num_edges();
      d.nodes_per_element = 6;
      d.element_nodes.resize(nt * 6);
      for (int k = 0; k < nt; ++k) {
        for (int i = 0; i < 3; ++i) {
          d.element_nodes[6 * k + i] = m.tri(k)[i];
          d.element_nodes[6 * k + 3 + i] = m.num_vertices() + m.tri_edges(k)[i];
        }
      }
      d.nodes.resize(d.num_nodes);
      for (int v = 0; v < m.num_vertices(); ++v)
        d.nodes[v] = {DofMap::Anchor::Vertex, v, m.vertex(v)};
      for (int j = 0; j < m.num_edges(); ++j) {
        const Edge& e = m.edge(j);
        d.nodes[m.num_vertices() + j] = {
            DofMap::Anchor::EdgeMidpoint, j,
            (m.vertex(e.v0) + m.vertex(e.v1)) * 0.5};
      }
      break;
    }
    case Family::P1:
      vertex_nodes();
      break;
    case Family::P1Disc:
      element_linear_nodes();
      break;
    case Family::P0:
      element_nodes();
      break;
    case Family::CRVector: {
      if (s.components != 2) throw ConfigError("P1CR-vector requires 2 components");
      d.num_nodes = m.num_edges();
      d.nodes_per_element = 3;
      d.element_nodes.resize(nt * 3);
      for (int k = 0; k < nt; ++k)
        for (int i = 0; i < 3; ++i) d.element_nodes[3 * k + i] = m.tri_edges(k)[i];
      d.nodes.resize(d.num_nodes);
      for (int j = 0; j < m.num_edges(); ++j) {
        const Edge& e = m.edge(j);
        d.nodes[j] = {DofMap::Anchor::EdgeMidpoint, j,
                      (m.vertex(e.v0) + m.vertex(e.v1)) * 0.5};
      }
      break;
    }
    case Family::P0Tensor:
      if (s.components != 3) throw ConfigError("tensor space requires 3 components");
      element_nodes();
      break;
    case Family::P1DiscTensor:
    case Family::P1PlusP0Tensor:
      if (s.components != 3) throw ConfigError("tensor space requires 3 components");
      element_linear_nodes();
      break;
  }
  return d;
}

namespace {

QuadRule make_rule_1() {
  return {1, {{{1.0 / 3, 1.0 / 3, 1.0 / 3}}}, {1.0}};
}

QuadRule make_rule_2() {
  QuadRule r;
  r.degree = 2;
  const double a = 2.0 / 3, b = 1.0 / 6;
  r.points = {{{a, b, b}}, {{b, a, b}}, {{b, b, a}}};
  r.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return r;
}

QuadRule make_rule_3() {
  // Strang's 6-point rule, degree 3, positive weights.
  QuadRule r;
  r.degree = 3;
  const double a = 0.659027622374092;
  const double b = 0.231933368553031;
  const double c = 0.109039009072877;
  r.points = {{{a, b, c}}, {{a, c, b}}, {{b, a, c}},
              {{b, c, a}}, {{c, a, b}}, {{c, b, a}}};
  r.weights.assign(6, 1.0 / 6);
  return r;
}

QuadRule make_rule_6() {
  // Dunavant's 12-point rule, degree 6, positive weights.
  QuadRule r;
  r.degree = 6;
  auto push3 = [&](double a, double b, double w) {
    r.points.push_back({a, b, b});
    r.points.push_back({b, a, b});
    r.points.push_back({b, b, a});
    r.weights.insert(r.weights.end(), 3, w);
  };
  auto push6 = [&](double a, double b, double c, double w) {
    r.points.push_back({a, b, c});
    r.points.push_back({a, c, b});
    r.points.push_back({b, a, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({c, b, a});
    r.weights.insert(r.weights.end(), 6, w);
  };
  push3(0.873821971016996, 0.063089014491502, 0.050844906370207);
  push3(0.501426509658179, 0.249286745170910, 0.116786275726379);
  push6(0.636502499121399, 0.310352451033785, 0.053145049844816,
        0.082851075618374);
  return r;
}

}  // namespace

const QuadRule& triangle_quadrature(int order) {
  static const QuadRule r1 = make_rule_1();
  static const QuadRule r2 = make_rule_2();
  static const QuadRule r3 = make_rule_3();
  static const QuadRule r6 = make_rule_6();
  switch (order) {
    case 1: return r1;
    case 2: return r2;
    case 3: return r3;
    case 6: return r6;
    default: throw ConfigError("unsupported quadrature order " + std::to_string(order));
  }
}

const EdgeRule& edge_quadrature(int npoints) {
  static const EdgeRule g1{{0.5}, {1.0}};
  static const EdgeRule g2{{0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)},
                           {0.5, 0.5}};
  static const EdgeRule g3{{0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)},
                           {5.0 / 18, 8.0 / 18, 5.0 / 18}};
  switch (npoints) {
    case 1: return g1;
    case 2: return g2;
    case 3: return g3;
    default: throw ConfigError("unsupported edge quadrature " + std::to_string(npoints));
  }
}

BasisEval eval_basis(const SpaceSpec& s, const Mesh&, int,
                     const std::array<double, 3>& bary) {
  BasisEval b;
  const double l0 = bary[0], l1 = bary[1], l2 = bary[2];
  // Reference gradients of the barycentric coordinates w.r.t. (xi, eta).
  static const Vec2 gl[3] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  switch (s.family) {
    case Family::P1:
    case Family::P1Disc:
    case Family::P1DiscTensor:
    case Family::P1PlusP0Tensor:
      b.n = 3;
      for (int i = 0; i < 3; ++i) {
        b.value[i] = bary[i];
        b.ref_grad[i] = gl[i];
      }
      break;
    case Family::P0:
    case Family::P0Tensor:
      b.n = 1;
      b.value[0] = 1.0;
      b.ref_grad[0] = {0.0, 0.0};
      break;
    case Family::CRVector:
      b.n = 3;
      for (int i = 0; i < 3; ++i) {
        b.value[i] = 1.0 - 2.0 * bary[i];
        b.ref_grad[i] = gl[i] * -2.0;
      }
      break;
    case Family::P2Vector: {
      b.n = 6;
      for (int i = 0; i < 3; ++i) {
        b.value[i] = bary[i] * (2.0 * bary[i] - 1.0);
        b.ref_grad[i] = gl[i] * (4.0 * bary[i] - 1.0);
      }
      const double l[3] = {l0, l1, l2};
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        b.value[3 + i] = 4.0 * l[j] * l[k];
        b.ref_grad[3 + i] = (gl[j] * l[k] + gl[k] * l[j]) * 4.0;
      }
      break;
    }
  }
  return b;
}

void physical_gradients(const Mesh& m, int k, const BasisEval& b,
                        std::array<Vec2, 6>& out) {
  const auto& t = m.tri(k);
  const Vec2 e1 = m.vertex(t[1]) - m.vertex(t[0]);
  const Vec2 e2 = m.vertex(t[2]) - m.vertex(t[0]);
  const double det = e1.cross(e2);
  // J^{-T} applied to the reference gradient.
  for (int i = 0; i < b.n; ++i) {
    const Vec2 g = b.ref_grad[i];
    out[i] = {(e2.y * g.x - e1.y * g.y) / det, (-e2.x * g.x + e1.x * g.y) / det};
  }
}

double ScalarField::value(const Mesh& m, int k, const std::array<double, 3>& bary) const {
  const BasisEval b = eval_basis(dofs->space, m, k, bary);
  double v = 0.0;
  for (int i = 0; i < b.n; ++i) v += coeff[dofs->node(k, i)] * b.value[i];
  return v;
}

Vec2 ScalarField::gradient(const Mesh& m, int k, const std::array<double, 3>& bary) const {
  const BasisEval b = eval_basis(dofs->space, m, k, bary);
  std::array<Vec2, 6> g;
  physical_gradients(m, k, b, g);
  Vec2 v{0.0, 0.0};
  for (int i = 0; i < b.n; ++i) v += g[i] * coeff[dofs->node(k, i)];
  return v;
}

Vec2 VectorField::value(const Mesh& m, int k, const std::array<double, 3>& bary) const {
  const BasisEval b = eval_basis(dofs->space, m, k, bary);
  Vec2 v{0.0, 0.0};
  for (int i = 0; i < b.n; ++i) {
    const int n = dofs->node(k, i);
    v.x += coeff[2 * n] * b.value[i];
    v.y += coeff[2 * n + 1] * b.value[i];
  }
  return v;
}

Mat2 VectorField::gradient(const Mesh& m, int k, const std::array<double, 3>& bary) const {
  const BasisEval b = eval_basis(dofs->space, m, k, bary);
  std::array<Vec2, 6> g;
  physical_gradients(m, k, b, g);
  Mat2 gv{};
  for (int i = 0; i < b.n; ++i) {
    const int n = dofs->node(k, i);
    gv.m00 += coeff[2 * n] * g[i].x;
    gv.m01 += coeff[2 * n] * g[i].y;
    gv.m10 += coeff[2 * n + 1] * g[i].x;
    gv.m11 += coeff[2 * n + 1] * g[i].y;
  }
  return gv;
}

SymTensorField SymTensorField::constant(const Mesh& m, Family f, const SymMat& v) {
  SymTensorField t;
  t.space = SpaceSpec::tensor(f);
  t.dofs = std::make_shared<DofMap>(build_dof_map(m, t.space));
  t.values.assign(t.dofs->num_nodes, v);
  return t;
}

SymMat SymTensorField::value(const Mesh&, int k, const std::array<double, 3>& bary) const {
  if (space.family == Family::P0Tensor) return values[dofs->node(k, 0)];
  SymMat v;
  for (int i = 0; i < 3; ++i) v += values[dofs->node(k, i)] * bary[i];
  return v;
}

SymMat SymTensorField::barycenter_value(int k) const {
  if (space.family == Family::P0Tensor) return values[dofs->node(k, 0)];
  const double third = 1.0 / 3.0;
  return (values[dofs->node(k, 0)] + values[dofs->node(k, 1)] +
          values[dofs->node(k, 2)]) * third;
}

SymTensorField pi_h(const Mesh& m, const SymTensorField& f) {
  SymTensorField out;
  out.space = SpaceSpec::tensor(Family::P0Tensor);
  out.dofs = std::make_shared<DofMap>(build_dof_map(m, out.space));
  out.values.resize(m.num_triangles());
  for (int k = 0; k < m.num_triangles(); ++k) out.values[k] = f.barycenter_value(k);
  return out;
}

}  // namespace oldroyd
