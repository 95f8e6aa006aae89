#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "liveload/common.hpp"
#include "liveload/geometry.hpp"
#include "liveload/material.hpp"

namespace liveload {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Constant P1 shape-function gradients of one triangle.
struct ElementGeometry {
  std::array<Vec2, 3> grads;
  double area = 0.0;
};

inline std::vector<ElementGeometry> element_geometry(const TriMesh& mesh) {
  std::vector<ElementGeometry> out(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    Mat2 D;
    D.col(0) = mesh.nodes[tri[1]] - mesh.nodes[tri[0]];
    D.col(1) = mesh.nodes[tri[2]] - mesh.nodes[tri[0]];
    const Mat2 Dinv = D.inverse();
    auto& e = out[t];
    e.grads[1] = Dinv.row(0).transpose();
    e.grads[2] = Dinv.row(1).transpose();
    e.grads[0] = -e.grads[1] - e.grads[2];
    e.area = mesh.signed_area(t);
  }
  return out;
}

// Gradient of the interleaved nodal field v (v[2a + i] = component i at node a)
// on triangle t: G_ij = sum_a v_ai d_j phi_a.
inline Mat2 element_gradient(const TriMesh& mesh, const ElementGeometry& e, int t, const Vector& v) {
  Mat2 G = Mat2::Zero();
  const auto& tri = mesh.triangles[t];
  for (int k = 0; k < 3; ++k) {
    const Vec2 va(v[2 * tri[k]], v[2 * tri[k] + 1]);
    G += va * e.grads[k].transpose();
  }
  return G;
}

// Stiffness of the quadratic energy 1/2 sum_T |T| Q(sym grad u).
inline SparseMatrix assemble_stiffness(const TriMesh& mesh, const std::vector<ElementGeometry>& geo,
                                       const MaterialModel& m) {
  const int n = 2 * mesh.num_nodes();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(36 * mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& e = geo[t];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const Vec2& ga = e.grads[a];
        const Vec2& gb = e.grads[b];
        const double dot = ga.dot(gb);
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            const double v = e.area * (m.c1 * 0.5 * ((i == j ? dot : 0.0) + ga[j] * gb[i]) + m.c2 * ga[i] * gb[j]);
            trips.emplace_back(2 * tri[a] + i, 2 * tri[b] + j, v);
          }
        }
      }
    }
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

// Infinitesimal rigid motions: two translations and J x.
inline Eigen::MatrixXd rigid_modes(const TriMesh& mesh) {
  const int n = mesh.num_nodes();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * n, 3);
  for (int a = 0; a < n; ++a) {
    T(2 * a, 0) = 1.0;
    T(2 * a + 1, 1) = 1.0;
    const Vec2 jx = perp(mesh.nodes[a]);
    T(2 * a, 2) = jx.x();
    T(2 * a + 1, 2) = jx.y();
  }
  return T;
}

// Linear gauge functionals: lumped-mass mean of each component and the mean
// of skew(grad u), i.e. the integral of (d1 u2 - d2 u1) / 2.
inline Eigen::MatrixXd gauge_constraints(const TriMesh& mesh, const std::vector<ElementGeometry>& geo) {
  const int n = mesh.num_nodes();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 3);
  for (int a = 0; a < n; ++a) {
    C(2 * a, 0) = mesh.node_masses[a];
    C(2 * a + 1, 1) = mesh.node_masses[a];
  }
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const Vec2& g = geo[t].grads[k];
      C(2 * tri[k], 2) += -0.5 * geo[t].area * g.y();
      C(2 * tri[k] + 1, 2) += 0.5 * geo[t].area * g.x();
    }
  }
  return C;
}

// Euclidean orthogonal projection onto {v : C^T v = 0}.
class SubspaceProjector {
 public:
  SubspaceProjector() = default;
  explicit SubspaceProjector(Eigen::MatrixXd C) : C_(std::move(C)) { gram_ = (C_.transpose() * C_).ldlt(); }

  Vector apply(const Vector& v) const {
    if (C_.cols() == 0) return v;
    return v - C_ * gram_.solve(C_.transpose() * v);
  }

  const Eigen::MatrixXd& constraints() const { return C_; }

 private:
  Eigen::MatrixXd C_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
};

// Solves K d = g - C lambda subject to C^T d = 0, where K is the stiffness
// with kernel spanned by the rigid modes T. The multiplier makes the
// right-hand side orthogonal to the kernel, three pinned degrees of freedom
// give an invertible reduced matrix, and the kernel component is then fixed
// by the gauge.
class ConstrainedStiffnessSolver {
 public:
  ConstrainedStiffnessSolver(const TriMesh& mesh, const SparseMatrix& K, Eigen::MatrixXd T, Eigen::MatrixXd C)
      : T_(std::move(T)), C_(std::move(C)) {
    const int n = static_cast<int>(K.rows());
    // pin node a fully and one component of the node farthest from it
    int a = 0;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      if (mesh.nodes[i].norm() < mesh.nodes[a].norm()) a = i;
    }
    int b = a;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
      if ((mesh.nodes[i] - mesh.nodes[a]).norm() > (mesh.nodes[b] - mesh.nodes[a]).norm()) b = i;
    }
    const Vec2 lever = perp(mesh.nodes[b] - mesh.nodes[a]);
    const int comp = std::abs(lever.x()) >= std::abs(lever.y()) ? 0 : 1;
    std::vector<char> pinned(n, 0);
    pinned[2 * a] = pinned[2 * a + 1] = pinned[2 * b + comp] = 1;
    free_index_.assign(n, -1);
    int nf = 0;
    for (int i = 0; i < n; ++i) {
      if (!pinned[i]) free_index_[i] = nf++;
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < K.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
        const int r = free_index_[it.row()], c = free_index_[it.col()];
        if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
      }
    }
    SparseMatrix Kf(nf, nf);
    Kf.setFromTriplets(trips.begin(), trips.end());
    ldlt_.compute(Kf);
    if (ldlt_.info() != Eigen::Success) throw SolverError("stiffness factorization failed");
    tc_.compute(Eigen::Matrix3d(T_.transpose() * C_));
    ct_.compute(Eigen::Matrix3d(C_.transpose() * T_));
  }

  Vector solve(const Vector& g) const {
    const Eigen::Vector3d lambda = tc_.solve(T_.transpose() * g);
    const Vector rhs = g - C_ * lambda;
    Vector rf(ldlt_.rows());
    for (int i = 0; i < static_cast<int>(free_index_.size()); ++i) {
      if (free_index_[i] >= 0) rf[free_index_[i]] = rhs[i];
    }
    const Vector df = ldlt_.solve(rf);
    Vector d = Vector::Zero(static_cast<Eigen::Index>(free_index_.size()));
    for (int i = 0; i < static_cast<int>(free_index_.size()); ++i) {
      if (free_index_[i] >= 0) d[i] = df[free_index_[i]];
    }
    const Eigen::Vector3d kappa = ct_.solve(C_.transpose() * d);
    return d - T_ * kappa;
  }

 private:
  Eigen::MatrixXd T_;
  Eigen::MatrixXd C_;
  std::vector<int> free_index_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  Eigen::PartialPivLU<Eigen::Matrix3d> tc_;
  Eigen::PartialPivLU<Eigen::Matrix3d> ct_;
};

}  // namespace liveload
