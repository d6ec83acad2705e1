#include "qlbm/symmetry.hpp"

#include <stdexcept>

#include "qlbm/lattice.hpp"

namespace qlbm::sym {

namespace {

D8Element compose(const D8Element& g, const D8Element& h, std::string name) {
    D8Element out;
    out.name = std::move(name);
    for (int i = 0; i < 9; ++i) out.perm[i] = g.perm[h.perm[i]];
    // row-major 2x2 product g.mat * h.mat
    out.mat = {g.mat[0] * h.mat[0] + g.mat[1] * h.mat[2],
               g.mat[0] * h.mat[1] + g.mat[1] * h.mat[3],
               g.mat[2] * h.mat[0] + g.mat[3] * h.mat[2],
               g.mat[2] * h.mat[1] + g.mat[3] * h.mat[3]};
    return out;
}

std::array<D8Element, 8> build_elements() {
    D8Element identity{"i", {0, 1, 2, 3, 4, 5, 6, 7, 8}, {1, 0, 0, 1}};
    // quarter turn, (x, y) -> (-y, x)
    D8Element r{"r", {0, 2, 3, 4, 1, 6, 7, 8, 5}, {0, -1, 1, 0}};
    // mirror about the x axis, (x, y) -> (x, -y)
    D8Element s{"s", {0, 1, 4, 3, 2, 8, 7, 6, 5}, {1, 0, 0, -1}};

    const D8Element r2 = compose(r, r, "r2");
    const D8Element r3 = compose(r2, r, "r3");
    return {identity,
            r,
            r2,
            r3,
            s,
            compose(r, s, "rs"),
            compose(r2, s, "r2s"),
            compose(r3, s, "r3s")};
}

}  // namespace

const std::array<D8Element, 8>& d8_elements() {
    static const std::array<D8Element, 8> elements = build_elements();
    return elements;
}

std::array<double, 9> transform_densities(const D8Element& e, const std::array<double, 9>& f) {
    std::array<double, 9> out{};
    for (int i = 0; i < 9; ++i) out[e.perm[i]] = f[i];
    return out;
}

std::vector<std::uint16_t> index_permutation_16(const D8Element& e) {
    std::vector<std::uint16_t> table(16);
    for (std::uint16_t x = 0; x < 16; ++x)
        table[x] = x < 9 ? static_cast<std::uint16_t>(e.perm[x]) : x;
    return table;
}

qc::ParamCircuit controlled_symmetry_block(const enc::RegisterLayout& layout,
                                           const qc::ParamCircuit& inner) {
    layout.validate();
    if (layout.ancilla.size() != 3)
        throw std::invalid_argument(
            "controlled_symmetry_block: layout has no symmetry ancilla register");

    const auto& elements = d8_elements();
    qc::ParamCircuit out;
    out.n_params = inner.n_params;

    for (std::uint32_t q : layout.ancilla) out.gates.emplace_back(qc::h(q));

    auto pattern_for = [&layout](int a) {
        std::vector<qc::BitConstraint> pattern;
        for (int k = 0; k < 3; ++k)
            pattern.emplace_back(layout.ancilla[k], (a >> (2 - k)) & 1);
        return pattern;
    };

    auto add_perms = [&](bool inverse) {
        for (int a = 0; a < 8; ++a) {
            auto table = index_permutation_16(elements[a]);
            if (inverse) {
                std::vector<std::uint16_t> inv(table.size());
                for (std::size_t x = 0; x < table.size(); ++x) inv[table[x]] = x;
                table = std::move(inv);
            }
            out.gates.emplace_back(qc::controlled(
                pattern_for(a), qc::index_permutation(layout.index, table)));
            if (!layout.index2.empty())
                out.gates.emplace_back(qc::controlled(
                    pattern_for(a), qc::index_permutation(layout.index2, table)));
        }
    };

    add_perms(false);
    for (const qc::ParamGate& pg : inner.gates) out.gates.push_back(pg);
    add_perms(true);
    return out;
}

}  // namespace qlbm::sym
