#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace memflow {

/// Mass-action reaction network over n named species and m reactions.
///
/// reactant_coeff (A) and product_coeff (B) are m x n integer stoichiometry
/// matrices stored row-major (row = reaction). Rate of reaction j is
/// K[j] * prod_i phi_i^A(j,i); the net volumetric source of species i is
/// sum_j (B(j,i) - A(j,i)) * rate_j. Production minus consumption, so a pure
/// reactant gets a negative source.
struct ReactionNetwork {
    int n_species = 0;
    std::vector<std::string> species_names;
    std::vector<double> K;                 ///< kinetic constants, one per reaction
    std::vector<int> reactant_coeff;       ///< A, m x n row-major
    std::vector<int> product_coeff;        ///< B, m x n row-major
    std::vector<bool> solid;               ///< per-species precipitating marker
    std::vector<double> molar_volume;      ///< V_s per species [m^3/mol], used for solids

    int n_reactions() const { return static_cast<int>(K.size()); }
    int a(int j, int i) const { return reactant_coeff[static_cast<size_t>(j) * n_species + i]; }
    int b(int j, int i) const { return product_coeff[static_cast<size_t>(j) * n_species + i]; }

    bool empty() const { return K.empty(); }
};

namespace detail {
/// phi^p for small non-negative integer p by repeated multiplication.
inline double int_pow(double phi, int p) {
    double r = 1.0;
    for (int k = 0; k < p; ++k) r *= phi;
    return r;
}
} // namespace detail

/// Rates of all reactions at the given concentrations [mol/(m^3 s)].
/// Concentrations must be non-negative.
inline std::vector<double> reaction_rates(const ReactionNetwork& net,
                                          const std::vector<double>& phi) {
    if (static_cast<int>(phi.size()) != net.n_species)
        throw std::invalid_argument("reaction_rates: phi size mismatch");
    for (double p : phi)
        if (!(p >= 0.0))
            throw std::invalid_argument("reaction_rates: negative concentration");
    std::vector<double> rates(net.K.size());
    for (int j = 0; j < net.n_reactions(); ++j) {
        double r = net.K[j];
        for (int i = 0; i < net.n_species; ++i) {
            const int a = net.a(j, i);
            if (a > 0) r *= detail::int_pow(phi[i], a);
        }
        rates[j] = r;
    }
    return rates;
}

/// Net volumetric source per species, (B - A)^T * rates [mol/(m^3 s)].
inline std::vector<double> species_sources(const ReactionNetwork& net,
                                           const std::vector<double>& rates) {
    if (rates.size() != net.K.size())
        throw std::invalid_argument("species_sources: rates size mismatch");
    std::vector<double> src(net.n_species, 0.0);
    for (int j = 0; j < net.n_reactions(); ++j)
        for (int i = 0; i < net.n_species; ++i)
            src[i] += static_cast<double>(net.b(j, i) - net.a(j, i)) * rates[j];
    return src;
}

/// Surface reaction fluxes at the membrane [mol/(m^2 s)]: the volumetric
/// sources evaluated at the membrane-face concentrations, scaled by the
/// membrane thickness ell (reactions run inside the membrane layer only;
/// bulk kinetics stay off).
inline std::vector<double> surface_reaction_flux(const ReactionNetwork& net,
                                               const std::vector<double>& phi_m,
                                               double ell) {
    if (!(ell >= 0.0))
        throw std::invalid_argument("surface_reaction_flux: ell must be non-negative");
    std::vector<double> xi = species_sources(net, reaction_rates(net, phi_m));
    for (double& x : xi) x *= ell;
    return xi;
}

} // namespace memflow
