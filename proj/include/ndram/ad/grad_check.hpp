#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ndram/ad/graph.hpp"
#include "ndram/ad/tensor.hpp"

namespace ndram::ad {

struct GradCheckEntry {
    std::string name;
    int index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
    bool stopped_intentional = false;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    GradCheckEntry worst;
    std::vector<GradCheckEntry> flagged_stops;  // declared-stopped coordinates
    bool stop_violation = false;                // a declared stop had nonzero analytic grad
    int coords_checked = 0;

    bool pass(double tol) const { return !stop_violation && max_rel_err <= tol; }
};

struct NamedLeaf {
    std::string name;
    Tensor tensor;
};

// Central finite differences against the tape gradient. `forward` must be a
// pure function of the leaf values: it is re-run with perturbed leaves, so any
// internal state (batch-norm running stats, rng) has to be rebuilt inside it.
// Leaves named in `declared_stopped` are expected to sit behind a gradient-stop
// marker: their analytic gradient must be exactly zero and their numeric
// gradient is reported but excluded from max_rel_err.
GradCheckReport grad_check(const std::function<Tensor(Graph&)>& forward,
                           const std::vector<NamedLeaf>& leaves, double step,
                           const std::set<std::string>& declared_stopped = {});

}  // namespace ndram::ad
