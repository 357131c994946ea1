#include "cohere/combination.hpp"

#include <cmath>
#include <stdexcept>

#include "cohere/hierarchy.hpp"
#include "cohere/linalg.hpp"
#include "cohere/random.hpp"

namespace cohere {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
    const Eigen::MatrixXd L = cholesky_lower(m, what);
    if ((L.diagonal().array() <= 0.0).any()) throw NumericalError(std::string(what) + " is singular");
    return symmetrize(cholesky_solve(L, Eigen::MatrixXd::Identity(m.rows(), m.cols())));
}

bool row_complete(const CombinationDesign& d, Eigen::Index t) {
    if (!d.targets.row(t).allFinite()) return false;
    for (const auto& c : d.design)
        if (!c.row(t).allFinite()) return false;
    return true;
}

}  // namespace

CombinationState CombinationState::initial(Eigen::Index levels, const std::vector<std::size_t>& selected,
                                           const Eigen::MatrixXd& selected_cov) {
    if (levels < 1) throw std::invalid_argument("combination: at least one level is required");
    if (selected.empty()) throw std::invalid_argument("combination: empty selection");
    const auto q = static_cast<Eigen::Index>(selected.size());
    if (selected_cov.rows() != q || selected_cov.cols() != q)
        throw std::invalid_argument("combination: covariance does not match the selection");
    CombinationState s;
    const double k = static_cast<double>(levels);
    s.prior_mean = Eigen::VectorXd::Constant(levels, 1.0 / k);
    s.weights = s.prior_mean;
    s.prior_sd = 2.0 / k;
    s.prior_dof = static_cast<double>(q) + 2.0;
    s.selected = selected;
    s.set_prior_covariance(selected_cov);
    s.precision = s.prior_dof * s.prior_scale;
    return s;
}

void CombinationState::set_prior_covariance(const Eigen::MatrixXd& selected_cov) {
    prior_scale = spd_inverse(selected_cov, "combination prior covariance") / prior_dof;
}

std::vector<std::size_t> independent_nodes(const Hierarchy& h, const std::vector<std::size_t>& selected) {
    std::vector<std::size_t> kept;
    Eigen::MatrixXd basis(0, static_cast<Eigen::Index>(h.atomic_count()));
    for (std::size_t node : selected) {
        if (node >= h.node_count()) throw std::out_of_range("combination: selected node out of range");
        Eigen::MatrixXd trial(basis.rows() + 1, basis.cols());
        trial << basis, h.summing_matrix().row(static_cast<Eigen::Index>(node));
        Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
        lu.setThreshold(1e-9);
        if (lu.rank() == trial.rows()) {
            basis = trial;
            kept.push_back(node);
        }
    }
    return kept;
}

CombinationDesign assemble_design(const std::vector<Eigen::MatrixXd>& level_updates, const Hierarchy& h,
                                  const std::vector<std::size_t>& selected, const Eigen::MatrixXd& residuals) {
    if (level_updates.empty()) throw std::invalid_argument("assemble_design: no level updates");
    if (selected.empty()) throw std::invalid_argument("assemble_design: empty selection");
    const Eigen::MatrixXd Ssel = h.rows(selected);
    if (residuals.cols() != Ssel.cols()) throw std::invalid_argument("assemble_design: residuals have wrong width");
    CombinationDesign d;
    d.targets = residuals * Ssel.transpose();
    for (const auto& u : level_updates) {
        if (u.rows() != residuals.rows() || u.cols() != residuals.cols())
            throw std::invalid_argument("assemble_design: level update shape mismatch");
        d.design.push_back(u * Ssel.transpose());
    }
    return d;
}

namespace {

// Unconstrained conditional of ω given H (prior plus data).
void unconstrained_posterior(const CombinationDesign& design, const CombinationState& state, Eigen::VectorXd& mean,
                             Eigen::MatrixXd& cov) {
    const Eigen::Index k = state.levels();
    if (static_cast<Eigen::Index>(design.design.size()) != k)
        throw std::invalid_argument("sample_weights: design has wrong number of levels");
    const Eigen::Index q = design.targets.cols();
    if (state.precision.rows() != q) throw std::invalid_argument("sample_weights: precision has wrong size");

    const double prior_prec = 1.0 / (state.prior_sd * state.prior_sd);
    Eigen::MatrixXd P = prior_prec * Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd b = prior_prec * state.prior_mean;
    Eigen::MatrixXd c(q, k);
    for (Eigen::Index t = 0; t < design.targets.rows(); ++t) {
        if (!row_complete(design, t)) continue;
        for (Eigen::Index j = 0; j < k; ++j) c.col(j) = design.design[static_cast<std::size_t>(j)].row(t).transpose();
        const Eigen::MatrixXd Hc = state.precision * c;
        P.noalias() += c.transpose() * Hc;
        b.noalias() += Hc.transpose() * design.targets.row(t).transpose();
    }
    cov = spd_inverse(symmetrize(P), "weight posterior precision");
    mean = cov * b;
}

}  // namespace

void weight_posterior(const CombinationDesign& design, const CombinationState& state, Eigen::VectorXd& mean,
                      Eigen::MatrixXd& cov) {
    unconstrained_posterior(design, state, mean, cov);
    const Eigen::VectorXd v1 = cov.rowwise().sum();
    const double s = v1.sum() + state.sum_sd * state.sum_sd;
    mean += v1 * ((1.0 - mean.sum()) / s);
    cov = symmetrize(cov - v1 * v1.transpose() / s);
}

Eigen::VectorXd sample_weights(const CombinationDesign& design, const CombinationState& state, Rng& rng) {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    unconstrained_posterior(design, state, mean, cov);
    // Draw from the unconstrained conditional, then condition on the noisy
    // pseudo-observation; the result has the exact constrained law.
    const Eigen::VectorXd w0 = sample_mvn(rng, mean, cov);
    const Eigen::VectorXd v1 = cov.rowwise().sum();
    const double s = v1.sum() + state.sum_sd * state.sum_sd;
    const double pseudo = 1.0 + state.sum_sd * rng.normal();
    return w0 + v1 * ((pseudo - w0.sum()) / s);
}

Eigen::MatrixXd sur_residuals(const CombinationDesign& design, const Eigen::VectorXd& weights) {
    if (static_cast<Eigen::Index>(design.design.size()) != weights.size())
        throw std::invalid_argument("sur_residuals: weight length mismatch");
    Eigen::MatrixXd fit = Eigen::MatrixXd::Zero(design.targets.rows(), design.targets.cols());
    for (std::size_t j = 0; j < design.design.size(); ++j) fit += weights(static_cast<Eigen::Index>(j)) * design.design[j];
    const Eigen::MatrixXd e = design.targets - fit;
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < e.rows(); ++t)
        if (e.row(t).allFinite()) rows.push_back(t);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), e.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = e.row(rows[i]);
    return out;
}

Eigen::MatrixXd sample_H(const Eigen::MatrixXd& sur_residuals, double prior_dof, const Eigen::MatrixXd& prior_scale,
                         Rng& rng) {
    const Eigen::Index q = prior_scale.rows();
    if (prior_scale.cols() != q || sur_residuals.cols() != q) throw std::invalid_argument("sample_H: dimension mismatch");
    if (prior_dof < static_cast<double>(q)) throw std::invalid_argument("sample_H: prior degrees of freedom below q");
    const Eigen::MatrixXd inv_prior = spd_inverse(prior_scale, "Wishart prior scale");
    const Eigen::MatrixXd scale =
        spd_inverse(symmetrize(inv_prior + sur_residuals.transpose() * sur_residuals), "Wishart posterior scale");
    return symmetrize(wishart(rng, prior_dof + static_cast<double>(sur_residuals.rows()), scale));
}

Eigen::VectorXd combine(const Eigen::VectorXd& prior_draw, const std::vector<Eigen::VectorXd>& level_updates,
                        const Eigen::VectorXd& weights, const Eigen::MatrixXd& S) {
    if (static_cast<Eigen::Index>(level_updates.size()) != weights.size())
        throw std::invalid_argument("combine: one weight per level update is required");
    if (S.cols() != prior_draw.size()) throw std::invalid_argument("combine: prior draw has wrong length");
    Eigen::VectorXd b = prior_draw;
    for (std::size_t j = 0; j < level_updates.size(); ++j) {
        if (level_updates[j].size() != b.size()) throw std::invalid_argument("combine: level update has wrong length");
        b += weights(static_cast<Eigen::Index>(j)) * level_updates[j];
    }
    return S * b;
}

}  // namespace cohere
