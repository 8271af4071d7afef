#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ndmd/model.hpp"

namespace ndmd::testing {

// Central finite difference of a scalar functional at one parameter slot.
inline double fd_central(const std::function<double()>& f, double* slot, double h = 1e-4) {
    const double saved = *slot;
    *slot = saved + h;
    double fp = f();
    *slot = saved - h;
    double fm = f();
    *slot = saved;
    return (fp - fm) / (2.0 * h);
}

struct FdReport {
    double worst_rel = 0.0;
    std::string worst_name;
    int checked = 0;
};

// Compares analytic gradients against central differences over every slot of
// every tensor (or a strided subset), using |a - fd| / max(|a|, |fd|, floor).
inline FdReport check_gradients(const std::vector<TensorRef<double>>& params,
                                const std::vector<TensorRef<double>>& grads,
                                const std::function<double()>& loss, double h = 1e-4,
                                double floor = 1e-6, int stride = 1) {
    FdReport rep;
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::ptrdiff_t j = 0; j < params[i].size; j += stride) {
            double fd = fd_central(loss, params[i].data + j, h);
            double a = grads[i].data[j];
            double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
            ++rep.checked;
            if (rel > rep.worst_rel) {
                rep.worst_rel = rel;
                rep.worst_name = params[i].name + "[" + std::to_string(j) + "]";
            }
        }
    }
    return rep;
}

}  // namespace ndmd::testing
