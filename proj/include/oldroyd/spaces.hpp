#pragma once

#include <array>
#include <memory>
#include <vector>

#include "oldroyd/mesh.hpp"
#include "oldroyd/tensor.hpp"

namespace oldroyd {

enum class Family {
  P2Vector,      ///< continuous quadratic vector field (vertex + edge nodes)
  P1,            ///< continuous linear scalar/vector field
  P1Disc,        ///< elementwise linear, discontinuous
  P0,            ///< elementwise constant
  CRVector,      ///< Crouzeix-Raviart: edge-midpoint nonconforming linears
  P0Tensor,      ///< symmetric tensor, one value per element
  P1DiscTensor,  ///< symmetric tensor, elementwise linear discontinuous
  P1PlusP0Tensor ///< P1 + elementwise constant; stored like P1Disc with a
                 ///  constraint flag (it is a strict subspace of it)
};

const char* family_name(Family f);
bool is_tensor_family(Family f);

struct SpaceSpec {
  Family family;
  int components = 1;

  static SpaceSpec scalar(Family f) { return {f, 1}; }
  static SpaceSpec vector(Family f) { return {f, 2}; }
  static SpaceSpec tensor(Family f) { return {f, 3}; }
};

/// Scalar-node numbering for a finite element family: per-element local to
/// global table plus a geometric anchor per node. Vector/tensor fields attach
/// `components` values to every node.
struct DofMap {
  enum class Anchor { Vertex, EdgeMidpoint, Element };
  struct Node {
    Anchor anchor;
    int anchor_index;  ///< vertex, edge, or element id
    Vec2 position;
  };

  SpaceSpec space;
  int num_nodes = 0;
  int nodes_per_element = 0;
  std::vector<int> element_nodes;  ///< num_triangles * nodes_per_element
  std::vector<Node> nodes;

  int node(int k, int i) const { return element_nodes[k * nodes_per_element + i]; }
  int dofs() const { return num_nodes * space.components; }
};

DofMap build_dof_map(const Mesh& m, const SpaceSpec& s);

/// Quadrature on the reference triangle in barycentric coordinates; weights
/// are normalized to sum to one, so integrals are |K| * sum w_q f(x_q).
/// `order` is the polynomial degree integrated exactly; supported: 1, 2, 3, 6.
struct QuadRule {
  int degree;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};
const QuadRule& triangle_quadrature(int order);

/// Gauss points on [0,1] with weights summing to one.
struct EdgeRule {
  std::vector<double> points;
  std::vector<double> weights;
};
const EdgeRule& edge_quadrature(int npoints = 2);

/// Shape function values and reference-coordinate gradients at a barycentric
/// point. Reference coordinates are (xi, eta) with lambda = (1-xi-eta, xi, eta).
struct BasisEval {
  int n = 0;
  std::array<double, 6> value{};
  std::array<Vec2, 6> ref_grad{};
};

BasisEval eval_basis(const SpaceSpec& s, const Mesh& m, int k,
                     const std::array<double, 3>& bary);

/// Push reference gradients to physical ones through the element map.
void physical_gradients(const Mesh& m, int k, const BasisEval& b,
                        std::array<Vec2, 6>& out);

/// Scalar finite element field.
struct ScalarField {
  std::shared_ptr<const DofMap> dofs;
  std::vector<double> coeff;

  double value(const Mesh& m, int k, const std::array<double, 3>& bary) const;
  Vec2 gradient(const Mesh& m, int k, const std::array<double, 3>& bary) const;
};

/// Vector finite element field; component c of node n lives at 2*n + c.
struct VectorField {
  std::shared_ptr<const DofMap> dofs;
  std::vector<double> coeff;

  Vec2 value(const Mesh& m, int k, const std::array<double, 3>& bary) const;
  Mat2 gradient(const Mesh& m, int k, const std::array<double, 3>& bary) const;
};

/// Symmetric tensor field with structurally symmetric storage: one SymMat per
/// scalar node of the tensor family.
struct SymTensorField {
  SpaceSpec space;
  std::shared_ptr<const DofMap> dofs;
  std::vector<SymMat> values;

  static SymTensorField constant(const Mesh& m, Family f, const SymMat& v);

  int nodes_per_element() const { return dofs->nodes_per_element; }
  const SymMat& node_value(int k, int i) const { return values[dofs->node(k, i)]; }
  SymMat& node_value(int k, int i) { return values[dofs->node(k, i)]; }

  SymMat value(const Mesh& m, int k, const std::array<double, 3>& bary) const;
  /// Value at the element barycenter (the pi_h value of the element).
  SymMat barycenter_value(int k) const;
};

/// Piecewise constant interpolation at barycenters. Coincides with the L2
/// orthogonal projection onto elementwise constants for P1disc inputs and
/// commutes with pointwise matrix functions.
SymTensorField pi_h(const Mesh& m, const SymTensorField& f);

}  // namespace oldroyd
