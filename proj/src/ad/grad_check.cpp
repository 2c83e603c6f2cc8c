#include "ndram/ad/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace ndram::ad {

GradCheckReport grad_check(const std::function<Tensor(Graph&)>& forward,
                           const std::vector<NamedLeaf>& leaves, double step,
                           const std::set<std::string>& declared_stopped) {
    if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

    // analytic pass
    std::vector<std::vector<double>> analytic;
    {
        Graph g;
        Tensor loss = forward(g);
        if (loss.numel() != 1)
            throw std::invalid_argument("grad_check: forward must produce a scalar");
        g.backward(loss);
        for (const NamedLeaf& leaf : leaves) {
            auto gr = leaf.tensor.grad();
            if (gr.empty())
                analytic.emplace_back(leaf.tensor.numel(), 0.0);
            else
                analytic.emplace_back(gr.begin(), gr.end());
        }
    }

    auto eval = [&forward]() {
        Graph g(false);
        return forward(g).item();
    };

    GradCheckReport report;
    for (size_t li = 0; li < leaves.size(); ++li) {
        const NamedLeaf& leaf = leaves[li];
        bool stopped = declared_stopped.count(leaf.name) != 0;
        auto vals = const_cast<Tensor&>(leaf.tensor).values_mut();
        for (size_t i = 0; i < vals.size(); ++i) {
            double saved = vals[i];
            vals[i] = saved + step;
            double fp = eval();
            vals[i] = saved - step;
            double fm = eval();
            vals[i] = saved;

            double numeric = (fp - fm) / (2.0 * step);
            double a = analytic[li][i];

            if (stopped) {
                GradCheckEntry e{leaf.name, static_cast<int>(i), a, numeric, 0.0, true};
                report.flagged_stops.push_back(e);
                if (a != 0.0) report.stop_violation = true;
                continue;
            }

            double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
            double rel = std::abs(a - numeric) / denom;
            ++report.coords_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst = GradCheckEntry{leaf.name, static_cast<int>(i), a, numeric, rel, false};
            }
        }
    }
    return report;
}

}  // namespace ndram::ad
