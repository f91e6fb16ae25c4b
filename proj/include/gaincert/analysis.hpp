#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gaincert/conic.hpp"
#include "gaincert/storage.hpp"

namespace gaincert {

struct MeshStats {
  int num_simplexes = 0;
  int num_vertices = 0;
};

struct SolverStats {
  std::string status;
  int iterations = 0;
  double wall_seconds = 0.0;  // printed, never serialized (outputs stay reproducible)
};

/// Post-hoc sampling report of the nominal gain LMI; filled by the check
/// module and carried along for serialization.
struct CheckReport {
  double max_violation = 0.0;
  int num_samples = 0;
  int num_skipped = 0;
  Eigen::VectorXd worst_point;
  double tol = 0.0;
  bool passed = false;
};

struct GainCertificate {
  double gamma_star = 0.0;
  double alpha_star = 0.0;
  std::variant<std::monostate, CpaFunction, HybridStorage> storage;
  MeshStats mesh_stats;
  SolverStats solver_stats;
  std::optional<CheckReport> check_report;
  std::optional<double> r_u;  // user-supplied small-signal radius, informational

  const Triangulation& tri() const;
  bool is_hybrid() const { return std::holds_alternative<HybridStorage>(storage); }
  bool has_storage() const { return !std::holds_alternative<std::monostate>(storage); }
};

/// Outcome of one gain analysis; infeasibility is a result, not an error.
struct AnalysisResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::optional<GainCertificate> certificate;
  bool feasible() const { return certificate.has_value(); }
};

struct AnalysisOptions {
  SolveOptions solver;
  AssemblyOptions assembly;
  std::optional<double> r_u;
};

/// Gain bound with a CPA storage function (requires B = 0). Constraints:
/// alpha >= alpha_min, V_x >= 0, gradient bounds, and the vertex LMIs for
/// every simplex and vertex except the origin point itself.
AnalysisResult bound_gain_cpa(const SystemModel& model, std::shared_ptr<const Triangulation> tri,
                              const AnalysisOptions& opts = {});

/// Gain bound with the quadratic + CPA storage on an annulus mesh whose hole
/// radius must equal epsilon (checked geometrically). Adds P >= delta I,
/// ||P|| <= l_p and the origin-ball LMI; vertex LMIs run over all annulus
/// vertices with no origin exclusion.
AnalysisResult bound_gain_hybrid(const SystemModel& model,
                                 std::shared_ptr<const Triangulation> tri_annulus, double epsilon,
                                 const AnalysisOptions& opts = {});

struct SweepRow {
  int num_simplexes = 0;
  double gamma_star = 0.0;  // +inf marks an infeasible level
  double solve_seconds = 0.0;
};

enum class GainMode { kCpa, kHybrid };

struct SweepOptions {
  AnalysisOptions analysis;
  int divisions = 8;            // level-0 mesh density
  int boundary_segments = 16;   // hybrid level-0 hole polygon
  std::optional<double> epsilon;
  /// Collects the per-level certificates when set.
  std::vector<AnalysisResult>* collect_results = nullptr;
};

/// Builds the level-0 mesh, refines repeatedly, and runs the matching
/// bound_gain_* at each level.
std::vector<SweepRow> refinement_sweep(const SystemModel& model, const Box& box, int levels,
                                       GainMode mode, const SweepOptions& opts = {});

std::string sweep_to_csv(const std::vector<SweepRow>& rows, bool with_timings);

/// Self-contained certificate document (mesh embedded) for the CLI and the
/// `check` subcommand.
std::string certificate_to_json(const GainCertificate& cert, const std::string& system_name,
                                const Box& region);
struct LoadedCertificate {
  GainCertificate certificate;
  std::string system_name;
  Box region;
};
LoadedCertificate certificate_from_json(const std::string& text);

}  // namespace gaincert
