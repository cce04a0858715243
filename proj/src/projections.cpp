#include "gelx/projections.hpp"

namespace gelx {

PopulationMoments<double> population_moments(const MomentModel& model, const WeightedSample& ref) {
    const Eigen::Index m = model.dim_g(), p = model.dim_theta();
    const Eigen::VectorXd th = model.theta_star();
    PopulationMoments<double> pm{Eigen::MatrixXd::Zero(m, p), Eigen::MatrixXd::Zero(m, m)};
    Eigen::VectorXd g(m);
    Eigen::MatrixXd G(m, p);
    for (Eigen::Index i = 0; i < ref.data.n(); ++i) {
        model.g(ref.data.obs(i), th, g);
        model.jacobian(ref.data.obs(i), th, G);
        pm.G += ref.w(i) * G;
        pm.Omega.noalias() += ref.w(i) * g * g.transpose();
    }
    pm.Omega = (pm.Omega + pm.Omega.transpose()) / 2.0;
    return pm;
}

PopulationMoments<double> population_moments(const MomentModel& model, MomentMethod method, Eigen::Index n_ref,
                                             std::uint64_t seed) {
    PopulationMoments<double> pm;
    if (method == MomentMethod::Analytic) {
        auto am = model.analytic_moments();
        if (!am) throw ConfigError(model.name() + " has no analytic moments");
        pm = {am->G, am->Omega};
    } else {
        pm = population_moments(model, reference_sample(model, n_ref, seed));
    }
    try {
        projection_set(pm);
    } catch (const IllConditionedError& e) {
        throw IllConditionedError(model.name() + " (n_ref = " + std::to_string(n_ref) + "): " + e.what());
    }
    return pm;
}

}  // namespace gelx
