#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slmlab/process_models.hpp"
#include "slmlab/sde_engine.hpp"

namespace slm {

enum class Verdict { martingale, strict_local_martingale, inconclusive };
const char* to_string(Verdict v);

struct Evidence {
  std::string criterion;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct ClassifierReport {
  std::string subject;
  Verdict verdict = Verdict::inconclusive;
  std::vector<Evidence> evidence;
  std::optional<double> confidence;  // z-score of the MC defect, when one was run

  const Evidence* find(const std::string& criterion) const;
  std::string to_json() const;
};

struct FellerSettings {
  int max_doublings = 60;
  double tail_tol = 1e-8;            // convergence: estimated remaining tail below this
  double ratio_ceiling = 0.95;       // increments must shrink at least this fast
  double slope_floor = 0.1;          // divergence: increment per doubling >= slope_floor * log 2
  double raabe_ceiling = 1.1;        // divergence: harmonic-like increments (Raabe statistic)
};

// Delbaen-Shirakawa integral of r / sigma^2(r) over [c_lower, inf), by
// quadrature over doubling ranges with a geometric tail estimate.
ClassifierReport feller_test(const std::function<double(double)>& sigma_1d, double c_lower,
                             const FellerSettings& settings = {});

struct DefectSettings {
  double T = 1.0;
  long n_paths = 200000;
  int n_steps = 2000;  // Euler only; exact samplers take one step
  std::uint64_t seed = 1;
  int workers = 1;
  double z_threshold = 3.0;
};

struct DefectResult {
  double defect = 0.0;  // sum x0 - E[sum X_T]
  double se = 0.0;
  double z = 0.0;
  std::string method;   // exact | euler | follmer
  ClassifierReport report;
};

// Exact single-step sampler for models with a Bessel dimension, the Foellmer
// explosion estimator for sin2d, Euler otherwise.
DefectResult martingale_defect(const DiffusionModel& model, const DefectSettings& settings = {});

// Feller test (1-d) and MC defect combined into one verdict.
ClassifierReport classify(const DiffusionModel& model, const DefectSettings& settings = {},
                          const FellerSettings& feller = {});

// Lower end of the Feller integral used for built-in models.
double feller_lower_limit(const DiffusionModel& model);

struct DoobResult {
  double lhs = 0.0;  // mean of (grid sup of sum X)^p
  double se = 0.0;
  double bound = 0.0;
  bool pass = false;
};
DoobResult doob_lp_check(const PathBatch& batch, double p);

struct LyapunovSpec {
  std::string name;
  std::function<double(const Eigen::VectorXd&)> psi;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_psi;  // optional
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess_psi;  // optional
  double lambda = 1.0;
  double c = 1.0;
  std::function<double(const Eigen::VectorXd&)> b;  // defaults to 1
};

struct LyapunovSettings {
  std::vector<Eigen::VectorXd> grid;  // empty: log-spaced default grid
  std::vector<double> radii;          // empty: powers of 4 from 16
  std::vector<double> face_eps;       // empty: 1e-1 .. 1e-8
  double face_threshold = 0.0;  // clause ii: psi must exceed this near the faces; 0 = 10 psi(1,..,1)
  double M = 2.0;                     // clause iii target
  double fd_rel_tol = 1e-3;
};

struct LyapunovClause {
  std::string clause;  // i | ii | iii | iv
  bool pass = false;
  double worst = 0.0;   // worst ratio (i, iv), smallest psi near face (ii), last psi/x (iii)
  double needed = 0.0;  // smallest constant that would pass on the grid (i: lambda, iv: c)
  int inconclusive_points = 0;
  std::string note;
};

struct LyapunovReport {
  std::string spec;
  std::vector<LyapunovClause> clauses;
  const LyapunovClause& clause(const std::string& id) const;
  bool all_pass() const;
  std::string to_json() const;
};

LyapunovReport verify_lyapunov(const DiffusionModel& model, const LyapunovSpec& spec,
                               const LyapunovSettings& settings = {});

// Psi = 1/x + x + int_e^x int_e^y z / sigma^2(z) dz dy for the loglog model, b as its weight.
LyapunovSpec loglog_lyapunov_spec(double lambda = 1.0, double c = 1.0);
// Psi = 1/x + 1 + x^2 (linear-growth recipe with a blow-up term at 0).
LyapunovSpec gbm_lyapunov_spec(double lambda = 1.0, double c = 2.0);
// Psi = 1 + x^2.
LyapunovSpec quadratic_lyapunov_spec(double lambda = 1.0, double c = 1.0);
// Psi_1 + Psi_2 built from sigma for a 1-d martingale; b = 0.
LyapunovSpec feller_recipe_spec(const DiffusionModel& model, double anchor = 1.0,
                                double lambda = 1.0, double c = 1.0);

struct FicheraPoint {
  Eigen::VectorXd base;  // coordinates away from the face (face coordinate ignored)
  double drift_limit = 0.0;
  double diffusion_limit = 0.0;  // (sigma sigma')_ii extrapolated to the face
  bool pass = false;             // drift_limit >= -tol
};

struct FicheraReport {
  int face = 0;
  bool degenerate = false;  // sigma sigma' vanishes on the face at every point
  bool applicable = false;
  bool pass = false;
  std::vector<FicheraPoint> points;
  std::string note;
};

// Fichera drift -1/2 sum_j d_j (sigma sigma')_ij on the approach x_i = eps -> 0.
FicheraReport fichera_check(const DiffusionModel& model, int face,
                            const std::vector<Eigen::VectorXd>& face_grid,
                            const std::vector<double>& eps_ladder = {}, double tol = 1e-6);

}  // namespace slm
