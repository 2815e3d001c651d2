#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dp::fem {

// Heap-free small vectors/matrices sized by the mesh dimension (1 or 2).
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;
using LocalVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using Point = SmallVector;
using NodalVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Axis-aligned box [lower_i, upper_i] in dimension 1 or 2.
struct Box {
  int dim = 1;
  std::array<double, 2> lower{0.0, 0.0};
  std::array<double, 2> upper{1.0, 1.0};

  static Box unit(int dim);
  bool operator==(const Box&) const = default;
};

// Quadrature on the reference simplex. Points are barycentric coordinates
// (dim + 1 entries used); weights sum to the reference volume (1 or 1/2).
struct QuadratureRule {
  int dim = 1;
  int degree = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  [[nodiscard]] double reference_volume() const { return dim == 1 ? 1.0 : 0.5; }
  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

// Cheapest built-in rule exact for polynomials of total degree `degree`.
// Supported: up to 9 in 1D (Gauss-Legendre), up to 5 on triangles.
QuadratureRule make_quadrature(int dim, int degree = 4);

class Mesh {
 public:
  // Validates connectivity, element volumes and boundary indices;
  // throws ConfigError on any violation.
  Mesh(int dim, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
       std::vector<int> boundary);

  [[nodiscard]] int dimension() const { return dim_; }
  [[nodiscard]] std::size_t num_nodes() const { return nodes_.size(); }
  [[nodiscard]] std::size_t num_elements() const { return elements_.size(); }
  [[nodiscard]] int nodes_per_element() const { return dim_ + 1; }

  [[nodiscard]] const Point& node(std::size_t i) const { return nodes_[i]; }
  [[nodiscard]] std::span<const int> element(std::size_t e) const {
    return {elements_[e].data(), static_cast<std::size_t>(dim_ + 1)};
  }
  [[nodiscard]] double volume(std::size_t e) const { return volumes_[e]; }
  [[nodiscard]] double measure() const { return measure_; }

  // Gradient of local basis function k (0..dim) on element e; constant per element.
  [[nodiscard]] const SmallVector& basis_gradient(std::size_t e, int k) const {
    return gradients_[e][static_cast<std::size_t>(k)];
  }

  [[nodiscard]] const std::vector<int>& boundary_nodes() const { return boundary_; }
  [[nodiscard]] bool is_boundary(std::size_t i) const { return mask_[i] != 0; }
  // One entry per node, nonzero on Dirichlet nodes.
  [[nodiscard]] const std::vector<char>& dirichlet_mask() const { return mask_; }
  [[nodiscard]] std::size_t num_free_nodes() const { return nodes_.size() - boundary_.size(); }

  [[nodiscard]] Point map_to_physical(std::size_t e, const std::array<double, 3>& bary) const;
  // Smallest and largest element diameter.
  [[nodiscard]] double min_diameter() const;
  [[nodiscard]] double max_diameter() const;

 private:
  int dim_;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<int> boundary_;
  std::vector<char> mask_;
  std::vector<double> volumes_;
  std::vector<std::array<SmallVector, 3>> gradients_;
  double measure_ = 0.0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

// Structured mesh of the box with `resolution` cells per axis. 2D cells are
// split into two triangles along the lower-left to upper-right diagonal.
MeshPtr build_uniform_mesh(const Box& box, int resolution);

// Uniform red refinement: intervals are halved, triangles split into four.
// The coarse space is nested in the refined one.
MeshPtr refine_uniform(const Mesh& mesh);

// Plain-text mesh format:
//   dim d / nodes n + n coordinate lines / elements m + m index lines /
//   boundary k + k node indices. Whitespace separated, '#' starts a comment.
MeshPtr read_mesh(std::istream& in);
MeshPtr load_mesh(const std::string& path);
void write_mesh(std::ostream& out, const Mesh& mesh);

// Piecewise-linear function: one coefficient per mesh node.
class DiscreteField {
 public:
  // Empty placeholder with no mesh; only assignment is meaningful.
  DiscreteField() = default;
  explicit DiscreteField(MeshPtr mesh);
  DiscreteField(MeshPtr mesh, NodalVector values);

  static DiscreteField interpolate(MeshPtr mesh, const std::function<double(const Point&)>& fn);

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] const MeshPtr& mesh_ptr() const { return mesh_; }
  [[nodiscard]] const NodalVector& values() const { return values_; }
  [[nodiscard]] NodalVector& values() { return values_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  // Value of the interpolant at a barycentric point of element e.
  [[nodiscard]] double value_at(std::size_t e, const std::array<double, 3>& bary) const;
  // True when every Dirichlet coefficient is exactly zero.
  [[nodiscard]] bool satisfies_dirichlet() const;
  [[nodiscard]] bool same_mesh(const DiscreteField& other) const { return mesh_ == other.mesh_; }

  DiscreteField& operator+=(const DiscreteField& other);
  DiscreteField& operator-=(const DiscreteField& other);
  DiscreteField& operator*=(double c);

 private:
  MeshPtr mesh_;
  NodalVector values_;
};

DiscreteField operator+(DiscreteField a, const DiscreteField& b);
DiscreteField operator-(DiscreteField a, const DiscreteField& b);
DiscreteField operator*(double c, DiscreteField a);

// Constant gradient of the interpolant on element e.
SmallVector gradient_on_element(const DiscreteField& field, std::size_t element);

// Data handed to an integrand at one quadrature point.
struct QuadraturePoint {
  std::size_t element;
  std::size_t index;                 // point index within the rule
  const std::array<double, 3>& bary;
  const Point& x;
  double weight;                     // physical weight (includes element volume)
};

using Integrand = std::function<double(const QuadraturePoint&)>;

// Sum over elements of weighted integrand values. Element sums are computed
// in parallel and combined in element order.
double integrate(const Mesh& mesh, const Integrand& integrand, const QuadratureRule& rule);

// Zero the Dirichlet coefficients of a field or nodal vector.
void apply_dirichlet(DiscreteField& field);
void apply_dirichlet(const Mesh& mesh, NodalVector& vec);
// Replace Dirichlet rows and columns by identity rows/columns.
void apply_dirichlet(const Mesh& mesh, SparseMatrix& matrix);

// Element-local assembly scaffolding. `local(e, out)` fills the element
// contribution; contributions are computed in parallel and scattered in
// element order.
using LocalVectorKernel = std::function<void(std::size_t, LocalVector&)>;
using LocalMatrixKernel = std::function<void(std::size_t, LocalMatrix&)>;
NodalVector assemble_vector(const Mesh& mesh, const LocalVectorKernel& local);
SparseMatrix assemble_matrix(const Mesh& mesh, const LocalMatrixKernel& local);

// Standard P1 Laplacian stiffness and consistent mass matrices (no Dirichlet rows applied).
SparseMatrix stiffness_matrix(const Mesh& mesh);
SparseMatrix mass_matrix(const Mesh& mesh);

}  // namespace dp::fem
