#include "ndmd/checkpoint.hpp"
#include "ndmd/decomp.hpp"
#include "ndmd/io.hpp"

namespace ndmd {

void write_decomposition(const std::string& base_path, const ModalDecomposition& d,
                         const std::optional<RunMeta>& meta) {
    // mode stack: pairs layout [w0, Re w1, Im w1, ...], free layout
    // [Re w0, Im w0, Re w1, Im w1, ...]
    std::vector<Eigen::MatrixXd> planes;
    if (d.pairs) {
        planes.push_back(d.modes[0].real());
        for (int k = 1; k < d.n_modes(); ++k) {
            planes.push_back(d.modes[std::size_t(k)].real());
            planes.push_back(d.modes[std::size_t(k)].imag());
        }
    } else {
        for (int k = 0; k < d.n_modes(); ++k) {
            planes.push_back(d.modes[std::size_t(k)].real());
            planes.push_back(d.modes[std::size_t(k)].imag());
        }
    }
    VideoGrid stack(int(planes.size()), d.H, d.W, 0.0, 1.0);
    for (int k = 0; k < stack.T; ++k) stack.set_frame(k, planes[std::size_t(k)]);
    nvid_write(base_path + "_modes.nvid", stack, meta);

    std::vector<std::vector<double>> rows;
    for (int k = 0; k < d.n_modes(); ++k)
        rows.push_back({double(k), d.omega[k].real(), d.omega[k].imag(), d.b[k].real(),
                        d.b[k].imag(), double(d.flagged[std::size_t(k)])});
    write_csv(base_path + "_spectrum.csv", {"k", "alpha", "omega", "b_re", "b_im", "flagged"},
              rows, meta);
}

}  // namespace ndmd
