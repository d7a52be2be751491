#pragma once

#include <string>
#include <vector>

#include "msym/lagrangian.hpp"
#include "msym/parse.hpp"

namespace corpus {

struct Model {
    std::string name;
    int m;
    int n;
    std::string lagrangian;
    bool regular;
    std::string hamiltonian;  // for singular models: H on the Legendre image
    std::vector<std::string> constraints;
};

inline const std::vector<Model>& models()
{
    static const std::vector<Model> all = {
        {"oscillator", 1, 1, "v_1_1^2/2 - y_1^2/2", true, "", {}},
        {"free_particle", 1, 1, "v_1_1^2/2", true, "", {}},
        {"affine", 1, 1, "v_1_1", false, "0", {"p_1_1 - 1"}},
        {"wave", 2, 1, "v_1_1^2/2 - v_1_2^2/2", true, "", {}},
        {"klein_gordon", 2, 1, "v_1_1^2/2 - v_1_2^2/2 - y_1^2/2", true, "", {}},
        {"rank_one", 2, 1, "(v_1_1 + v_1_2)^2/2", false, "p_1_1^2/2", {"p_1_1 - p_1_2"}},
    };
    return all;
}

inline msym::LagrangianSystem system(const Model& md)
{
    return {md.m, md.n, msym::parse_expr(md.lagrangian, msym::SymbolTable::jet(md.m, md.n))};
}

}  // namespace corpus
