#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "liveload/common.hpp"
#include "liveload/geometry.hpp"
#include "liveload/material.hpp"
#include "liveload/pressure.hpp"
#include "liveload/stiffness.hpp"

namespace liveload {

// Deformation y = R(frame_angle) (x + w), stored as a frame angle and an
// interleaved nodal displacement w. Keeping the rigid rotation out of w keeps
// small strains at full relative precision.
struct DeformationField {
  double frame_angle = 0.0;
  Vector w;

  Vec2 displacement(int node) const { return {w[2 * node], w[2 * node + 1]}; }

  Vector nodal_positions(const TriMesh& mesh) const {
    const Mat2 R = rotation(frame_angle);
    Vector y(2 * mesh.num_nodes());
    for (int a = 0; a < mesh.num_nodes(); ++a) y.segment<2>(2 * a) = R * (mesh.nodes[a] + displacement(a));
    return y;
  }

  static DeformationField identity(const TriMesh& mesh) { return {0.0, Vector::Zero(2 * mesh.num_nodes())}; }

  static DeformationField rigid(const TriMesh& mesh, double alpha) {
    return {alpha, Vector::Zero(2 * mesh.num_nodes())};
  }

  // Plain nodal positions, read in the identity frame.
  static DeformationField from_positions(const TriMesh& mesh, const Vector& y) {
    DeformationField f{0.0, y};
    for (int a = 0; a < mesh.num_nodes(); ++a) f.w.segment<2>(2 * a) -= mesh.nodes[a];
    return f;
  }
};

struct EnergyValue {
  double energy = 0.0;
  double magnitude = 0.0;  // sum of absolute contributions, for roundoff estimates
  bool admissible = true;
};

// Discrete energy: sum over triangles of |T| W(grad y) plus eps times the
// quadrature of pi_hat(y) det grad y - pi_hat(x).
class EnergyAssembler {
 public:
  EnergyAssembler(const TriMesh& mesh, MaterialModel material, PressureField pi_hat, double eps,
                  QuadratureRule rule = QuadratureRule::standard())
      : mesh_(mesh),
        material_(material),
        pi_(std::move(pi_hat)),
        eps_(eps),
        rule_(std::move(rule)),
        geo_(element_geometry(mesh)) {
    material_.validate();
    if (!(eps_ >= 0.0)) throw ValidationError("eps must be nonnegative");
    const std::size_t nq = rule_.interior.weights.size();
    reference_points_.resize(nq * mesh.triangles.size());
    reference_values_.resize(reference_points_.size(), 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      for (std::size_t q = 0; q < nq; ++q) {
        const Vec2 x = triangle_point(mesh, t, rule_.interior.points[q]);
        reference_points_[t * nq + q] = x;
        reference_values_[t * nq + q] = pi_.identically_zero ? 0.0 : pi_(x);
      }
    }
  }

  const TriMesh& mesh() const { return mesh_; }
  const MaterialModel& material() const { return material_; }
  const PressureField& pressure() const { return pi_; }
  double eps() const { return eps_; }
  const std::vector<ElementGeometry>& geometry() const { return geo_; }

  EnergyValue energy(const DeformationField& y) const {
    double gt = 0.0;
    return evaluate(y, nullptr, &gt);
  }

  // Energy with the derivative in the frame angle and in w (unprojected).
  EnergyValue energy_and_gradient(const DeformationField& y, double& grad_angle, Vector& grad_w) const {
    grad_w.setZero(2 * mesh_.num_nodes());
    grad_angle = 0.0;
    return evaluate(y, &grad_w, &grad_angle);
  }

  // Smallest triangle determinant of grad y.
  double min_det(const DeformationField& y) const {
    double m = kInfinity;
    for (int t = 0; t < mesh_.num_triangles(); ++t) {
      const Mat2 G = element_gradient(mesh_, geo_[t], t, y.w);
      m = std::min(m, 1.0 + G.trace() + G.determinant());
    }
    return m;
  }

  // Pieces of the energy at an admissible y: elastic part, pressure part,
  // the integral of (det - 1)^2 over {|det - 1| <= 1} and the sum of |T| g_p(dist).
  struct Parts {
    double elastic = 0.0;
    double pressure = 0.0;
    double det_dev_sq = 0.0;
    double gp_dist = 0.0;
  };

  Parts parts(const DeformationField& y) const {
    Parts out;
    CompensatedSum el, pr, dd, gp;
    const Mat2 R = rotation(y.frame_angle);
    const std::size_t nq = rule_.interior.weights.size();
    for (int t = 0; t < mesh_.num_triangles(); ++t) {
      const auto& e = geo_[t];
      const Mat2 G = element_gradient(mesh_, e, t, y.w);
      const StrainSplit sp = split_displacement_gradient(G);
      if (!(sp.det_minus_one > -1.0)) throw ValidationError("deformation is not orientation preserving");
      const double dist = sp.dist();
      el.add(e.area * (material_.c1 * g_mixed(dist, material_.p) +
                       material_.c2 * g_mixed(std::abs(sp.det_minus_one), material_.q)));
      gp.add(e.area * g_mixed(dist, material_.p));
      if (std::abs(sp.det_minus_one) <= 1.0) dd.add(e.area * sp.det_minus_one * sp.det_minus_one);
      if (pi_.identically_zero) continue;
      const auto& tri = mesh_.triangles[t];
      for (std::size_t q = 0; q < nq; ++q) {
        const auto& bc = rule_.interior.points[q];
        const Vec2 X = reference_points_[t * nq + q] +
                       bc[0] * y.displacement(tri[0]) + bc[1] * y.displacement(tri[1]) + bc[2] * y.displacement(tri[2]);
        const double py = pi_(R * X);
        pr.add(eps_ * e.area * rule_.interior.weights[q] *
               (py * sp.det_minus_one + (py - reference_values_[t * nq + q])));
      }
    }
    out.elastic = el.value();
    out.pressure = pr.value();
    out.det_dev_sq = dd.value();
    out.gp_dist = gp.value();
    return out;
  }

 private:
  EnergyValue evaluate(const DeformationField& y, Vector* grad_w, double* grad_angle) const {
    EnergyValue out;
    CompensatedSum total, mag, gangle;
    const Mat2 R = rotation(y.frame_angle);
    const Mat2 Jg = rotation_generator();
    const std::size_t nq = rule_.interior.weights.size();
    for (int t = 0; t < mesh_.num_triangles(); ++t) {
      const auto& e = geo_[t];
      const auto& tri = mesh_.triangles[t];
      const Mat2 G = element_gradient(mesh_, e, t, y.w);
      const StrainSplit sp = split_displacement_gradient(G);
      if (!(sp.det_minus_one > -1.0)) {
        out.admissible = false;
        out.energy = kInfinity;
        return out;
      }
      const double W = material_.c1 * g_mixed(sp.dist(), material_.p) +
                       material_.c2 * g_mixed(std::abs(sp.det_minus_one), material_.q);
      total.add(e.area * W);
      mag.add(e.area * W);
      Mat2 cof;
      if (grad_w) {
        const Mat2 P = stress_displacement(material_, G);
        for (int k = 0; k < 3; ++k) grad_w->segment<2>(2 * tri[k]) += e.area * (P * e.grads[k]);
        cof = cofactor(Mat2::Identity() + G);
      }
      if (pi_.identically_zero || eps_ == 0.0) continue;
      const double jac = 1.0 + sp.det_minus_one;
      for (std::size_t q = 0; q < nq; ++q) {
        const auto& bc = rule_.interior.points[q];
        const double wq = eps_ * e.area * rule_.interior.weights[q];
        const Vec2 X = reference_points_[t * nq + q] +
                       bc[0] * y.displacement(tri[0]) + bc[1] * y.displacement(tri[1]) + bc[2] * y.displacement(tri[2]);
        const Vec2 yq = R * X;
        const double py = pi_(yq);
        const double px = reference_values_[t * nq + q];
        total.add(wq * (py * sp.det_minus_one + (py - px)));
        mag.add(std::abs(wq) * (std::abs(py * sp.det_minus_one) + std::abs(py) + std::abs(px)));
        if (grad_w) {
          const Vec2 gp = pi_.gradient(yq);
          const Vec2 pull = R.transpose() * gp;
          for (int k = 0; k < 3; ++k) {
            grad_w->segment<2>(2 * tri[k]) += wq * (bc[k] * jac * pull + py * (cof * e.grads[k]));
          }
          gangle.add(wq * jac * gp.dot(R * (Jg * X)));
        }
      }
    }
    out.energy = total.value();
    out.magnitude = mag.value();
    if (grad_angle) *grad_angle = gangle.value();
    return out;
  }

  const TriMesh& mesh_;
  MaterialModel material_;
  PressureField pi_;
  double eps_;
  QuadratureRule rule_;
  std::vector<ElementGeometry> geo_;
  std::vector<Vec2> reference_points_;
  std::vector<double> reference_values_;
};

// Euclidean projection onto nodal fields with zero lumped-mass mean.
inline Vector project_zero_mean(const TriMesh& mesh, const Vector& v) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(v.size(), 2);
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    C(2 * a, 0) = mesh.node_masses[a];
    C(2 * a + 1, 1) = mesh.node_masses[a];
  }
  return SubspaceProjector(C).apply(v);
}

// Energy of nodal positions y.
inline double assemble_energy(const TriMesh& mesh, const MaterialModel& m, const PressureField& pi_hat,
                              const Vector& y, double eps) {
  return EnergyAssembler(mesh, m, pi_hat, eps).energy(DeformationField::from_positions(mesh, y)).energy;
}

// Nodal gradient with respect to y, projected onto the zero-average subspace.
inline Vector assemble_gradient(const TriMesh& mesh, const MaterialModel& m, const PressureField& pi_hat,
                                const Vector& y, double eps) {
  EnergyAssembler assembler(mesh, m, pi_hat, eps);
  double ga = 0.0;
  Vector g;
  const EnergyValue v = assembler.energy_and_gradient(DeformationField::from_positions(mesh, y), ga, g);
  if (!v.admissible) throw ValidationError("gradient requested at an inadmissible deformation");
  return project_zero_mean(mesh, g);
}

struct MinimizeOptions {
  double grad_tol = 1e-9;  // relative to 1 + |E|
  int max_iterations = 5000;
  int memory = 20;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  bool record_history = false;
};

struct SolveDiagnostics {
  double final_energy = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int backtracks = 0;
  int admissibility_violations = 0;
  bool converged = false;
  std::string status;
  std::vector<double> energy_history;  // accepted iterates, when requested
  std::vector<double> noise_history;   // roundoff floor at each accepted iterate
};

// Rewrites y in the gauge used by the minimizer: w has zero mass mean and zero
// mean skew gradient, the rigid rotation is carried by the frame angle.
inline DeformationField normalize_frame(const TriMesh& mesh, const std::vector<ElementGeometry>& geo,
                                        const DeformationField& y) {
  Mat2 Fbar = Mat2::Zero();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Fbar += geo[t].area * (Mat2::Identity() + element_gradient(mesh, geo[t], t, y.w));
  }
  const double delta = std::atan2(Fbar(1, 0) - Fbar(0, 1), Fbar(0, 0) + Fbar(1, 1));
  DeformationField out;
  out.frame_angle = normalize_angle(y.frame_angle + delta);
  out.w = y.w;
  if (delta != 0.0) {
    const Mat2 Rt = rotation(-delta);
    for (int a = 0; a < mesh.num_nodes(); ++a) {
      const Vec2 x = mesh.nodes[a];
      out.w.segment<2>(2 * a) = Rt * (x + y.displacement(a)) - x;
    }
  }
  Vec2 mean = Vec2::Zero();
  double mass = 0.0;
  for (int a = 0; a < mesh.num_nodes(); ++a) {
    mean += mesh.node_masses[a] * out.displacement(a);
    mass += mesh.node_masses[a];
  }
  mean /= mass;
  for (int a = 0; a < mesh.num_nodes(); ++a) out.w.segment<2>(2 * a) -= mean;
  return out;
}

// Preconditioned L-BFGS over (frame angle, w) with w restricted to the gauge
// subspace. The initial inverse Hessian is the constrained inverse of the
// linear elastic stiffness on w and a fixed scalar on the angle.
class NonlinearMinimizer {
 public:
  NonlinearMinimizer(const EnergyAssembler& assembler, MinimizeOptions opt = {})
      : A_(assembler),
        opt_(opt),
        K_(assemble_stiffness(assembler.mesh(), assembler.geometry(), assembler.material())),
        C_(gauge_constraints(assembler.mesh(), assembler.geometry())),
        projector_(C_),
        precond_(assembler.mesh(), K_, rigid_modes(assembler.mesh()), C_) {
    const TriMesh& mesh = assembler.mesh();
    double moment = 0.0;
    for (int a = 0; a < mesh.num_nodes(); ++a) moment += mesh.node_masses[a] * mesh.nodes[a].squaredNorm();
    const auto& pi = assembler.pressure();
    double slope = 0.0;
    if (!pi.identically_zero) {
      for (int a = 0; a < mesh.num_nodes(); ++a) slope = std::max(slope, pi.gradient(mesh.nodes[a]).norm());
    }
    const double m = assembler.material().c1 + assembler.material().c2;
    angle_stiffness_ = std::max(assembler.eps() * slope * moment * mesh.max_radius(), 1e-6 * m * moment);
  }

  std::pair<DeformationField, SolveDiagnostics> minimize(const DeformationField& init) const {
    const TriMesh& mesh = A_.mesh();
    SolveDiagnostics diag;
    DeformationField x = normalize_frame(mesh, A_.geometry(), init);
    double ga = 0.0;
    Vector gw;
    EnergyValue fx = A_.energy_and_gradient(x, ga, gw);
    if (!fx.admissible) throw ValidationError("initial deformation is not orientation preserving");
    const double f_init = fx.energy;
    const DeformationField x_init = x;

    std::deque<std::pair<Vector, Vector>> memory;  // (s, y) over the stacked variables
    auto stack = [](double a, const Vector& w) {
      Vector z(w.size() + 1);
      z[0] = a;
      z.tail(w.size()) = w;
      return z;
    };
    auto reduced_norm = [&](double a, const Vector& w) {
      return std::sqrt(a * a + projector_.apply(w).squaredNorm());
    };
    auto apply_h0 = [&](const Vector& g) {
      Vector d(g.size());
      d[0] = g[0] / angle_stiffness_;
      d.tail(g.size() - 1) = precond_.solve(g.tail(g.size() - 1));
      return d;
    };

    Vector g = stack(ga, gw);
    double gnorm = reduced_norm(ga, gw);
    if (opt_.record_history) {
      diag.energy_history.push_back(fx.energy);
      diag.noise_history.push_back(noise_floor(fx));
    }
    diag.status = "iteration cap reached";

    for (int it = 0; it < opt_.max_iterations; ++it) {
      if (gnorm <= opt_.grad_tol * (1.0 + std::abs(fx.energy))) {
        diag.converged = true;
        diag.status = "converged";
        break;
      }
      // two-loop recursion
      Vector q = g;
      std::vector<double> alpha(memory.size());
      for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
        const auto& [s, y] = memory[i];
        alpha[i] = s.dot(q) / s.dot(y);
        q -= alpha[i] * y;
      }
      Vector d = apply_h0(q);
      for (std::size_t i = 0; i < memory.size(); ++i) {
        const auto& [s, y] = memory[i];
        const double beta = y.dot(d) / s.dot(y);
        d += s * (alpha[i] - beta);
      }
      d = -d;
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        memory.clear();
        d = -apply_h0(g);
        slope = g.dot(d);
        if (!(slope < 0.0)) {
          diag.status = "no descent direction";
          break;
        }
      }

      bool accepted = false;
      bool restarted = false;
      DeformationField trial;
      EnergyValue ft;
      double ta = 0.0;
      Vector tw;
      while (!accepted) {
        double step = 1.0;
        const double noise = noise_floor(fx);
        for (int bt = 0; bt <= opt_.max_backtracks; ++bt) {
          trial.frame_angle = x.frame_angle + step * d[0];
          trial.w = x.w + step * d.tail(d.size() - 1);
          ft = A_.energy_and_gradient(trial, ta, tw);
          if (!ft.admissible) {
            ++diag.admissibility_violations;
          } else if (ft.energy <= fx.energy + opt_.armijo * step * slope) {
            accepted = true;
          } else if (std::abs(step * slope) <= noise && ft.energy <= fx.energy + noise &&
                     reduced_norm(ta, tw) < gnorm) {
            // below roundoff the Armijo test cannot be decided; accept steps
            // that keep the energy within noise and reduce the gradient
            accepted = true;
          }
          if (accepted) break;
          ++diag.backtracks;
          step *= opt_.backtrack;
        }
        if (accepted) break;
        if (restarted || memory.empty()) break;
        memory.clear();
        restarted = true;
        d = -apply_h0(g);
        slope = g.dot(d);
      }
      if (!accepted) {
        diag.status = gnorm <= 1e3 * opt_.grad_tol * (1.0 + std::abs(fx.energy)) ? "stalled at roundoff" : "line search failed";
        break;
      }

      Vector gt = stack(ta, tw);
      Vector s(d.size());
      s[0] = trial.frame_angle - x.frame_angle;
      s.tail(d.size() - 1) = trial.w - x.w;
      Vector yv = gt - g;
      if (s.dot(yv) > 1e-14 * s.norm() * yv.norm()) {
        memory.emplace_back(std::move(s), std::move(yv));
        if (static_cast<int>(memory.size()) > opt_.memory) memory.pop_front();
      }
      x = trial;
      fx = ft;
      g = gt;
      gnorm = reduced_norm(ta, tw);
      diag.iterations = it + 1;
      if (opt_.record_history) {
        diag.energy_history.push_back(fx.energy);
        diag.noise_history.push_back(noise_floor(fx));
      }
    }

    if (fx.energy > f_init) {
      x = x_init;
      fx = A_.energy_and_gradient(x, ga, gw);
      gnorm = reduced_norm(ga, gw);
    }
    x.frame_angle = normalize_angle(x.frame_angle);
    diag.final_energy = fx.energy;
    diag.gradient_norm = gnorm;
    if (!diag.converged && gnorm <= opt_.grad_tol * (1.0 + std::abs(fx.energy))) {
      diag.converged = true;
      diag.status = "converged";
    }
    return {x, diag};
  }

  double noise_floor(const EnergyValue& v) const { return 64.0 * DBL_EPSILON * v.magnitude; }

 private:
  const EnergyAssembler& A_;
  MinimizeOptions opt_;
  SparseMatrix K_;
  Eigen::MatrixXd C_;
  SubspaceProjector projector_;
  ConstrainedStiffnessSolver precond_;
  double angle_stiffness_ = 1.0;
};

inline std::pair<DeformationField, SolveDiagnostics> minimize_energy(const TriMesh& mesh, const MaterialModel& m,
                                                                     const PressureField& pi_hat, double eps,
                                                                     const DeformationField& init,
                                                                     const MinimizeOptions& opt = {}) {
  EnergyAssembler assembler(mesh, m, pi_hat, eps);
  return NonlinearMinimizer(assembler, opt).minimize(init);
}

}  // namespace liveload
