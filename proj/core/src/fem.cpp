#include "dp/fem.hpp"

#include "dp/error.hpp"
#include "dp/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <utility>

namespace dp::fem {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

void add_orbit3(QuadratureRule& rule, double a, double weight) {
  const double b = 1.0 - 2.0 * a;
  rule.points.push_back({a, a, b});
  rule.points.push_back({a, b, a});
  rule.points.push_back({b, a, a});
  for (int i = 0; i < 3; ++i) rule.weights.push_back(weight);
}

}  // namespace

Box Box::unit(int dim) {
  Box b;
  b.dim = dim;
  return b;
}

QuadratureRule make_quadrature(int dim, int degree) {
  if (degree < 0) throw ConfigError("quadrature degree must be nonnegative");
  QuadratureRule rule;
  rule.dim = dim;
  if (dim == 1) {
    if (degree > 9) throw ConfigError("1D quadrature supports degree <= 9");
    const int n = std::max(1, (degree + 2) / 2);
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    for (int i = 0; i < n; ++i) {
      const double t = 0.5 * (x[static_cast<std::size_t>(i)] + 1.0);
      rule.points.push_back({1.0 - t, t, 0.0});
      rule.weights.push_back(0.5 * w[static_cast<std::size_t>(i)]);
    }
    rule.degree = 2 * n - 1;
    return rule;
  }
  if (dim != 2) throw ConfigError("quadrature dimension must be 1 or 2");
  if (degree <= 1) {
    rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    rule.weights.push_back(0.5);
    rule.degree = 1;
  } else if (degree == 2) {
    add_orbit3(rule, 1.0 / 6.0, 1.0 / 6.0);
    rule.degree = 2;
  } else if (degree <= 5) {
    // 7-point degree-5 rule (Radon).
    const double s15 = std::sqrt(15.0);
    rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    rule.weights.push_back(0.5 * 9.0 / 40.0);
    add_orbit3(rule, (6.0 - s15) / 21.0, 0.5 * (155.0 - s15) / 1200.0);
    add_orbit3(rule, (6.0 + s15) / 21.0, 0.5 * (155.0 + s15) / 1200.0);
    rule.degree = 5;
  } else {
    throw ConfigError("triangle quadrature supports degree <= 5");
  }
  return rule;
}

Mesh::Mesh(int dim, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements,
           std::vector<int> boundary)
    : dim_(dim), nodes_(std::move(nodes)), elements_(std::move(elements)), boundary_(std::move(boundary)) {
  if (dim_ != 1 && dim_ != 2) throw ConfigError("mesh dimension must be 1 or 2");
  if (nodes_.empty() || elements_.empty()) throw ConfigError("mesh must have nodes and elements");
  const int n = static_cast<int>(nodes_.size());
  for (const auto& p : nodes_) {
    if (p.size() != dim_) throw ConfigError("node coordinate count does not match mesh dimension");
  }
  mask_.assign(nodes_.size(), 0);
  std::sort(boundary_.begin(), boundary_.end());
  boundary_.erase(std::unique(boundary_.begin(), boundary_.end()), boundary_.end());
  for (int b : boundary_) {
    if (b < 0 || b >= n) throw ConfigError("boundary node index out of range: " + std::to_string(b));
    mask_[static_cast<std::size_t>(b)] = 1;
  }

  volumes_.resize(elements_.size());
  gradients_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    for (int k = 0; k <= dim_; ++k) {
      if (el[static_cast<std::size_t>(k)] < 0 || el[static_cast<std::size_t>(k)] >= n) {
        throw ConfigError("element " + std::to_string(e) + " references node out of range");
      }
    }
    if (dim_ == 1) {
      const double a = nodes_[static_cast<std::size_t>(el[0])][0];
      const double b = nodes_[static_cast<std::size_t>(el[1])][0];
      const double len = b - a;
      if (!(std::abs(len) > 0.0)) throw ConfigError("element " + std::to_string(e) + " has zero length");
      volumes_[e] = std::abs(len);
      gradients_[e][0] = SmallVector::Constant(1, -1.0 / len);
      gradients_[e][1] = SmallVector::Constant(1, 1.0 / len);
    } else {
      const Point& p0 = nodes_[static_cast<std::size_t>(el[0])];
      const Point& p1 = nodes_[static_cast<std::size_t>(el[1])];
      const Point& p2 = nodes_[static_cast<std::size_t>(el[2])];
      Eigen::Matrix2d jac;
      jac.col(0) = p1 - p0;
      jac.col(1) = p2 - p0;
      const double det = jac.determinant();
      const double scale = std::max({(p1 - p0).squaredNorm(), (p2 - p0).squaredNorm(), (p2 - p1).squaredNorm()});
      if (!(std::abs(det) > 1e-14 * scale)) {
        throw ConfigError("element " + std::to_string(e) + " is a degenerate triangle");
      }
      volumes_[e] = 0.5 * std::abs(det);
      const Eigen::Matrix2d inv_t = jac.inverse().transpose();
      const Eigen::Vector2d g1 = inv_t.col(0);
      const Eigen::Vector2d g2 = inv_t.col(1);
      gradients_[e][1] = g1;
      gradients_[e][2] = g2;
      gradients_[e][0] = -(g1 + g2);
    }
    measure_ += volumes_[e];
  }

  if (dim_ == 1) {
    // Intervals must tile [min, max] without gaps or overlap.
    std::vector<std::pair<double, double>> spans;
    spans.reserve(elements_.size());
    for (const auto& el : elements_) {
      const double a = nodes_[static_cast<std::size_t>(el[0])][0];
      const double b = nodes_[static_cast<std::size_t>(el[1])][0];
      spans.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
      const double gap = spans[i].first - spans[i - 1].second;
      if (std::abs(gap) > 1e-12 * (spans.back().second - spans.front().first)) {
        throw ConfigError("1D elements must be contiguous and non-overlapping");
      }
    }
  }
}

Point Mesh::map_to_physical(std::size_t e, const std::array<double, 3>& bary) const {
  Point x = Point::Zero(dim_);
  const auto el = element(e);
  for (int k = 0; k <= dim_; ++k) x += bary[static_cast<std::size_t>(k)] * nodes_[static_cast<std::size_t>(el[static_cast<std::size_t>(k)])];
  return x;
}

namespace {
double element_diameter(const Mesh& mesh, std::size_t e) {
  const auto el = mesh.element(e);
  double d = 0.0;
  for (std::size_t a = 0; a < el.size(); ++a)
    for (std::size_t b = a + 1; b < el.size(); ++b)
      d = std::max(d, (mesh.node(static_cast<std::size_t>(el[a])) - mesh.node(static_cast<std::size_t>(el[b]))).norm());
  return d;
}
}  // namespace

double Mesh::min_diameter() const {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < num_elements(); ++e) d = std::min(d, element_diameter(*this, e));
  return d;
}

double Mesh::max_diameter() const {
  double d = 0.0;
  for (std::size_t e = 0; e < num_elements(); ++e) d = std::max(d, element_diameter(*this, e));
  return d;
}

MeshPtr build_uniform_mesh(const Box& box, int resolution) {
  if (box.dim != 1 && box.dim != 2) throw ConfigError("box dimension must be 1 or 2");
  if (resolution < 1) throw ConfigError("mesh resolution must be >= 1");
  for (int i = 0; i < box.dim; ++i) {
    if (!(box.upper[static_cast<std::size_t>(i)] > box.lower[static_cast<std::size_t>(i)])) {
      throw ConfigError("box side lengths must be positive");
    }
  }
  const int n = resolution;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> elements;
  std::vector<int> boundary;
  if (box.dim == 1) {
    const double h = (box.upper[0] - box.lower[0]) / n;
    for (int i = 0; i <= n; ++i) {
      const double x = (i == n) ? box.upper[0] : box.lower[0] + i * h;
      nodes.push_back(Point::Constant(1, x));
    }
    for (int i = 0; i < n; ++i) elements.push_back({i, i + 1, 0});
    boundary = {0, n};
  } else {
    const double hx = (box.upper[0] - box.lower[0]) / n;
    const double hy = (box.upper[1] - box.lower[1]) / n;
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        Point p(2);
        p << (i == n ? box.upper[0] : box.lower[0] + i * hx), (j == n ? box.upper[1] : box.lower[1] + j * hy);
        nodes.push_back(p);
        if (i == 0 || j == 0 || i == n || j == n) boundary.push_back(id(i, j));
      }
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    }
  }
  return std::make_shared<const Mesh>(box.dim, std::move(nodes), std::move(elements), std::move(boundary));
}

MeshPtr refine_uniform(const Mesh& mesh) {
  std::vector<Point> nodes;
  nodes.reserve(mesh.num_nodes() * 4);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) nodes.push_back(mesh.node(i));
  std::vector<int> boundary = mesh.boundary_nodes();
  std::vector<std::array<int, 3>> elements;

  // Edge -> (midpoint index, number of adjacent elements).
  std::map<std::pair<int, int>, std::pair<int, int>> edges;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = edges.find(key);
    if (it != edges.end()) {
      ++it->second.second;
      return it->second.first;
    }
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(0.5 * (mesh.node(static_cast<std::size_t>(a)) + mesh.node(static_cast<std::size_t>(b))));
    edges.emplace(key, std::make_pair(idx, 1));
    return idx;
  };

  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto el = mesh.element(e);
    if (mesh.dimension() == 1) {
      const int m = midpoint(el[0], el[1]);
      elements.push_back({el[0], m, 0});
      elements.push_back({m, el[1], 0});
    } else {
      const int a = el[0], b = el[1], c = el[2];
      const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      elements.push_back({a, ab, ca});
      elements.push_back({ab, b, bc});
      elements.push_back({ca, bc, c});
      elements.push_back({ab, bc, ca});
    }
  }
  if (mesh.dimension() == 2) {
    // A midpoint lies on the boundary iff its edge belongs to a single triangle.
    for (const auto& [key, info] : edges) {
      if (info.second == 1) boundary.push_back(info.first);
    }
  }
  return std::make_shared<const Mesh>(mesh.dimension(), std::move(nodes), std::move(elements), std::move(boundary));
}

namespace {

class Tokenizer {
 public:
  explicit Tokenizer(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      if (const auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens_.push_back(tok);
    }
  }
  std::string next(const char* what) {
    if (pos_ >= tokens_.size()) throw ConfigError(std::string("mesh file: unexpected end of input, expected ") + what);
    return tokens_[pos_++];
  }
  void expect(const std::string& word) {
    const std::string tok = next(word.c_str());
    if (tok != word) throw ConfigError("mesh file: expected '" + word + "', found '" + tok + "'");
  }
  template <class T>
  T number(const char* what) {
    const std::string tok = next(what);
    std::istringstream ss(tok);
    T v{};
    if (!(ss >> v) || !ss.eof()) throw ConfigError("mesh file: invalid " + std::string(what) + " '" + tok + "'");
    return v;
  }
  bool done() const { return pos_ >= tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

MeshPtr read_mesh(std::istream& in) {
  Tokenizer tok(in);
  tok.expect("dim");
  const int dim = tok.number<int>("dimension");
  if (dim != 1 && dim != 2) throw ConfigError("mesh file: dim must be 1 or 2");
  tok.expect("nodes");
  const long n = tok.number<long>("node count");
  if (n <= 0) throw ConfigError("mesh file: node count must be positive");
  std::vector<Point> nodes;
  for (long i = 0; i < n; ++i) {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = tok.number<double>("coordinate");
    nodes.push_back(p);
  }
  tok.expect("elements");
  const long m = tok.number<long>("element count");
  std::vector<std::array<int, 3>> elements;
  for (long e = 0; e < m; ++e) {
    std::array<int, 3> el{0, 0, 0};
    for (int k = 0; k <= dim; ++k) el[static_cast<std::size_t>(k)] = tok.number<int>("element index");
    elements.push_back(el);
  }
  tok.expect("boundary");
  const long k = tok.number<long>("boundary count");
  std::vector<int> boundary;
  for (long i = 0; i < k; ++i) boundary.push_back(tok.number<int>("boundary index"));
  if (!tok.done()) throw ConfigError("mesh file: trailing content after boundary section");
  return std::make_shared<const Mesh>(dim, std::move(nodes), std::move(elements), std::move(boundary));
}

MeshPtr load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file: " + path);
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const auto old_precision = out.precision(17);
  out << "dim " << mesh.dimension() << "\n";
  out << "nodes " << mesh.num_nodes() << "\n";
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.node(i);
    for (int k = 0; k < mesh.dimension(); ++k) out << (k ? " " : "") << p[k];
    out << "\n";
  }
  out << "elements " << mesh.num_elements() << "\n";
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto el = mesh.element(e);
    for (std::size_t k = 0; k < el.size(); ++k) out << (k ? " " : "") << el[k];
    out << "\n";
  }
  out << "boundary " << mesh.boundary_nodes().size() << "\n";
  for (int b : mesh.boundary_nodes()) out << b << "\n";
  out.precision(old_precision);
}

DiscreteField::DiscreteField(MeshPtr mesh) : mesh_(std::move(mesh)) {
  if (!mesh_) throw ConfigError("field requires a mesh");
  values_ = NodalVector::Zero(static_cast<Eigen::Index>(mesh_->num_nodes()));
}

DiscreteField::DiscreteField(MeshPtr mesh, NodalVector values) : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw ConfigError("field requires a mesh");
  if (static_cast<std::size_t>(values_.size()) != mesh_->num_nodes()) {
    throw ConfigError("field has " + std::to_string(values_.size()) + " coefficients but mesh has " +
                      std::to_string(mesh_->num_nodes()) + " nodes");
  }
}

DiscreteField DiscreteField::interpolate(MeshPtr mesh, const std::function<double(const Point&)>& fn) {
  DiscreteField f(std::move(mesh));
  for (std::size_t i = 0; i < f.mesh().num_nodes(); ++i) f[i] = fn(f.mesh().node(i));
  return f;
}

double DiscreteField::value_at(std::size_t e, const std::array<double, 3>& bary) const {
  const auto el = mesh_->element(e);
  double v = 0.0;
  for (std::size_t k = 0; k < el.size(); ++k) v += bary[k] * values_[el[k]];
  return v;
}

bool DiscreteField::satisfies_dirichlet() const {
  return std::all_of(mesh_->boundary_nodes().begin(), mesh_->boundary_nodes().end(),
                     [&](int b) { return values_[b] == 0.0; });
}

DiscreteField& DiscreteField::operator+=(const DiscreteField& other) {
  if (!same_mesh(other)) throw ConfigError("field arithmetic on different meshes");
  values_ += other.values_;
  return *this;
}

DiscreteField& DiscreteField::operator-=(const DiscreteField& other) {
  if (!same_mesh(other)) throw ConfigError("field arithmetic on different meshes");
  values_ -= other.values_;
  return *this;
}

DiscreteField& DiscreteField::operator*=(double c) {
  values_ *= c;
  return *this;
}

DiscreteField operator+(DiscreteField a, const DiscreteField& b) { return a += b; }
DiscreteField operator-(DiscreteField a, const DiscreteField& b) { return a -= b; }
DiscreteField operator*(double c, DiscreteField a) { return a *= c; }

SmallVector gradient_on_element(const DiscreteField& field, std::size_t element) {
  const Mesh& mesh = field.mesh();
  if (element >= mesh.num_elements()) {
    throw std::out_of_range("element index " + std::to_string(element) + " out of range");
  }
  const auto el = mesh.element(element);
  SmallVector g = SmallVector::Zero(mesh.dimension());
  for (std::size_t k = 0; k < el.size(); ++k) g += field.values()[el[k]] * mesh.basis_gradient(element, static_cast<int>(k));
  return g;
}

double integrate(const Mesh& mesh, const Integrand& integrand, const QuadratureRule& rule) {
  if (rule.dim != mesh.dimension()) throw ConfigError("quadrature rule dimension does not match mesh");
  const double ref = rule.reference_volume();
  return parallel::ordered_sum(mesh.num_elements(), [&](std::size_t e) {
    const double scale = mesh.volume(e) / ref;
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = mesh.map_to_physical(e, rule.points[q]);
      const double w = rule.weights[q] * scale;
      sum += w * integrand(QuadraturePoint{e, q, rule.points[q], x, w});
    }
    return sum;
  });
}

void apply_dirichlet(DiscreteField& field) { apply_dirichlet(field.mesh(), field.values()); }

void apply_dirichlet(const Mesh& mesh, NodalVector& vec) {
  for (int b : mesh.boundary_nodes()) vec[b] = 0.0;
}

void apply_dirichlet(const Mesh& mesh, SparseMatrix& matrix) {
  const auto& mask = mesh.dirichlet_mask();
  for (int k = 0; k < matrix.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      const auto c = static_cast<std::size_t>(it.col());
      if (mask[r] || mask[c]) it.valueRef() = (r == c) ? 1.0 : 0.0;
    }
  }
  // Diagonal entries missing from the pattern (isolated boundary nodes).
  for (int b : mesh.boundary_nodes()) {
    if (matrix.coeff(b, b) != 1.0) matrix.coeffRef(b, b) = 1.0;
  }
  matrix.prune(0.0);
}

NodalVector assemble_vector(const Mesh& mesh, const LocalVectorKernel& local) {
  const int nloc = mesh.nodes_per_element();
  std::vector<LocalVector> parts(mesh.num_elements());
  parallel::for_each_index(mesh.num_elements(), [&](std::size_t e) {
    parts[e] = LocalVector::Zero(nloc);
    local(e, parts[e]);
  });
  NodalVector out = NodalVector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  for (std::size_t e = 0; e < parts.size(); ++e) {
    const auto el = mesh.element(e);
    for (int a = 0; a < nloc; ++a) out[el[static_cast<std::size_t>(a)]] += parts[e][a];
  }
  return out;
}

SparseMatrix assemble_matrix(const Mesh& mesh, const LocalMatrixKernel& local) {
  const int nloc = mesh.nodes_per_element();
  std::vector<LocalMatrix> parts(mesh.num_elements());
  parallel::for_each_index(mesh.num_elements(), [&](std::size_t e) {
    parts[e] = LocalMatrix::Zero(nloc, nloc);
    local(e, parts[e]);
  });
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(parts.size() * static_cast<std::size_t>(nloc * nloc));
  for (std::size_t e = 0; e < parts.size(); ++e) {
    const auto el = mesh.element(e);
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b)
        triplets.emplace_back(el[static_cast<std::size_t>(a)], el[static_cast<std::size_t>(b)], parts[e](a, b));
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseMatrix stiffness_matrix(const Mesh& mesh) {
  return assemble_matrix(mesh, [&](std::size_t e, LocalMatrix& k) {
    const int nloc = mesh.nodes_per_element();
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b) k(a, b) = mesh.volume(e) * mesh.basis_gradient(e, a).dot(mesh.basis_gradient(e, b));
  });
}

SparseMatrix mass_matrix(const Mesh& mesh) {
  return assemble_matrix(mesh, [&](std::size_t e, LocalMatrix& m) {
    const int nloc = mesh.nodes_per_element();
    const double d = mesh.dimension();
    // Exact P1 mass: |e| (1 + delta_ab) / ((d + 1)(d + 2)).
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b) m(a, b) = mesh.volume(e) * (a == b ? 2.0 : 1.0) / ((d + 1.0) * (d + 2.0));
  });
}

}  // namespace dp::fem
