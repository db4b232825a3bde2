#include "ipca/fem.hpp"

#include <vector>

namespace ipca {

namespace {

void check_length(const FemSystem& sys, const Eigen::VectorXd& c, const char* who) {
  if (c.size() != sys.dim()) {
    throw DimensionMismatch(std::string(who) + ": coefficient vector has length " +
                            std::to_string(c.size()) + ", expected " +
                            std::to_string(sys.dim()));
  }
}

}  // namespace

FemSystem assemble(const TriMesh& mesh, int channels) {
  if (channels < 1) throw DimensionMismatch("channels must be >= 1");
  const int kappa = mesh.node_count();

  std::vector<Eigen::Triplet<double>> mass_entries;
  std::vector<Eigen::Triplet<double>> stiff_entries;
  mass_entries.reserve(mesh.triangle_count() * 9u);
  stiff_entries.reserve(mesh.triangle_count() * 9u);

  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const Eigen::Vector3d& p0 = mesh.nodes()[tri[0]];
    const Eigen::Vector3d& p1 = mesh.nodes()[tri[1]];
    const Eigen::Vector3d& p2 = mesh.nodes()[tri[2]];
    const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();

    // edge opposite each local vertex
    const Eigen::Vector3d e[3] = {p2 - p1, p0 - p2, p1 - p0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double mass = (i == j) ? area / 6.0 : area / 12.0;
        mass_entries.emplace_back(tri[i], tri[j], mass);
        stiff_entries.emplace_back(tri[i], tri[j], e[i].dot(e[j]) / (4.0 * area));
      }
    }
  }

  FemSystem sys;
  sys.channels = channels;
  sys.nodes = kappa;
  sys.mass.resize(kappa, kappa);
  sys.mass.setFromTriplets(mass_entries.begin(), mass_entries.end());
  sys.mass.makeCompressed();
  sys.stiffness.resize(kappa, kappa);
  sys.stiffness.setFromTriplets(stiff_entries.begin(), stiff_entries.end());
  sys.stiffness.makeCompressed();

  sys.lumped_mass = sys.mass * Eigen::VectorXd::Ones(kappa);
  for (int j = 0; j < kappa; ++j) {
    if (!(sys.lumped_mass[j] > 0.0)) {
      throw InvalidMesh("lumped mass non-positive at node " + std::to_string(j));
    }
  }
  return sys;
}

Eigen::VectorXd penalty_apply(const FemSystem& sys, const Eigen::VectorXd& c) {
  check_length(sys, c, "penalty_apply");
  Eigen::VectorXd out(c.size());
  const int k = sys.nodes;
  for (int q = 0; q < sys.channels; ++q) {
    const Eigen::VectorXd ac = sys.stiffness * c.segment(q * k, k);
    out.segment(q * k, k) = sys.stiffness * (ac.array() / sys.lumped_mass.array()).matrix();
  }
  return out;
}

double penalty_quadform(const FemSystem& sys, const Eigen::VectorXd& c) {
  check_length(sys, c, "penalty_quadform");
  double total = 0.0;
  const int k = sys.nodes;
  for (int q = 0; q < sys.channels; ++q) {
    const Eigen::VectorXd ac = sys.stiffness * c.segment(q * k, k);
    total += (ac.array().square() / sys.lumped_mass.array()).sum();
  }
  return total;
}

Eigen::VectorXd penalty_diagonal(const FemSystem& sys) {
  const int k = sys.nodes;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
  for (int col = 0; col < sys.stiffness.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.stiffness, col); it; ++it) {
      diag[col] += it.value() * it.value() / sys.lumped_mass[it.row()];
    }
  }
  Eigen::VectorXd out(sys.dim());
  for (int q = 0; q < sys.channels; ++q) out.segment(q * k, k) = diag;
  return out;
}

double gradient_energy(const FemSystem& sys, const Eigen::VectorXd& c) {
  check_length(sys, c, "gradient_energy");
  double total = 0.0;
  const int k = sys.nodes;
  for (int q = 0; q < sys.channels; ++q) {
    const auto block = c.segment(q * k, k);
    total += block.dot(sys.stiffness * block);
  }
  return total;
}

double l2_inner(const FemSystem& sys, const Eigen::VectorXd& c1,
                const Eigen::VectorXd& c2) {
  check_length(sys, c1, "l2_inner");
  check_length(sys, c2, "l2_inner");
  double total = 0.0;
  const int k = sys.nodes;
  for (int q = 0; q < sys.channels; ++q) {
    total += c1.segment(q * k, k).dot(sys.mass * c2.segment(q * k, k));
  }
  return total;
}

double m_norm(const FemSystem& sys, const Eigen::VectorXd& c) {
  return std::sqrt(std::max(0.0, l2_inner(sys, c, c)));
}

double m_correlation(const FemSystem& sys, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b) {
  const double na = m_norm(sys, a);
  const double nb = m_norm(sys, b);
  if (na == 0.0 || nb == 0.0) {
    throw DimensionMismatch("m_correlation: zero vector");
  }
  return l2_inner(sys, a, b) / (na * nb);
}

double m_angle(const FemSystem& sys, const Eigen::VectorXd& a,
               const Eigen::VectorXd& b) {
  const double cosine = std::min(1.0, std::abs(m_correlation(sys, a, b)));
  return std::acos(cosine);
}

}  // namespace ipca
