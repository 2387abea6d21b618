#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tamrl/modulation/film.hpp"
#include "tamrl/networks/init.hpp"
#include "tamrl/networks/layers.hpp"

namespace tamrl {

/// One linear map per modulation site, z[H_z] -> [2 * width]. The first half
/// of each output is gamma, the second half beta.
struct GeneratorParams {
    std::vector<SiteSpec> sites;
    std::vector<Affine> maps;

    std::size_t embedding_size() const { return maps.front().in(); }

    /// Total length of the modulation vector tau.
    std::size_t tau_size() const {
        std::size_t n = 0;
        for (const auto& s : sites) n += 2 * s.width;
        return n;
    }

    void validate() const {
        if (sites.empty() || sites.size() != maps.size()) throw ShapeError("GeneratorParams: one map per site required");
        for (std::size_t i = 0; i < sites.size(); ++i) {
            if (maps[i].out() != 2 * sites[i].width || maps[i].in() != maps.front().in()) {
                throw ShapeError("GeneratorParams: map for site " + site_name(sites[i].tag, sites[i].layer) +
                                 " has shape " + shape_str(maps[i].weight.shape()) + ", expected output " +
                                 std::to_string(2 * sites[i].width));
            }
        }
    }

    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "generator") {
        for (std::size_t i = 0; i < maps.size(); ++i) maps[i].for_each_tensor(f, prefix + "." + site_name(sites[i].tag, sites[i].layer));
    }
    template <class F>
    void for_each_tensor(F&& f, const std::string& prefix = "generator") const {
        for (std::size_t i = 0; i < maps.size(); ++i) maps[i].for_each_tensor(f, prefix + "." + site_name(sites[i].tag, sites[i].layer));
    }

    bool operator==(const GeneratorParams&) const = default;
};

/// Fan-in uniform weights; the bias starts at (1...1, 0...0) so an untrained
/// generator emits identity modulation up to the weight term.
inline GeneratorParams init_generator(std::vector<SiteSpec> sites, std::size_t embedding_size, SeededRng& rng) {
    GeneratorParams g;
    g.sites = std::move(sites);
    for (const auto& s : g.sites) {
        Affine a = init_affine(embedding_size, 2 * s.width, rng);
        for (std::size_t j = 0; j < s.width; ++j) a.bias[j] = 1.0;
        g.maps.push_back(std::move(a));
    }
    return g;
}

/// tau = concat over sites of W_s z + b_s.
inline Tensor modulation_vector(const GeneratorParams& g, const Tensor& z) {
    g.validate();
    if (z.size() != g.embedding_size()) {
        throw ShapeError("generate_modulation: embedding has " + std::to_string(z.size()) + " entries, generator expects " +
                         std::to_string(g.embedding_size()));
    }
    std::vector<double> tau;
    tau.reserve(g.tau_size());
    for (const auto& m : g.maps) {
        std::vector<double> out(m.bias.values().begin(), m.bias.values().end());
        gemv_acc(m.weight, z.values(), out);
        tau.insert(tau.end(), out.begin(), out.end());
    }
    return Tensor::vector(std::move(tau));
}

/// Cuts tau into per-site (gamma, beta) pairs.
inline std::vector<FilmSite> split_modulation(const std::vector<SiteSpec>& sites, const Tensor& tau) {
    std::size_t expected = 0;
    for (const auto& s : sites) expected += 2 * s.width;
    if (tau.size() != expected) {
        throw ShapeError("split_modulation: tau has " + std::to_string(tau.size()) + " entries, sites need " +
                         std::to_string(expected));
    }
    std::vector<FilmSite> out;
    std::size_t pos = 0;
    for (const auto& s : sites) {
        FilmSite f{s, Tensor({s.width}), Tensor({s.width})};
        for (std::size_t j = 0; j < s.width; ++j) f.gamma[j] = tau[pos + j];
        for (std::size_t j = 0; j < s.width; ++j) f.beta[j] = tau[pos + s.width + j];
        pos += 2 * s.width;
        out.push_back(std::move(f));
    }
    return out;
}

/// Inverse of split_modulation.
inline Tensor join_modulation(const std::vector<FilmSite>& sites) {
    std::vector<double> tau;
    for (const auto& s : sites) {
        tau.insert(tau.end(), s.gamma.values().begin(), s.gamma.values().end());
        tau.insert(tau.end(), s.beta.values().begin(), s.beta.values().end());
    }
    return Tensor::vector(std::move(tau));
}

inline std::vector<FilmSite> generate_modulation(const GeneratorParams& g, const Tensor& z) {
    return split_modulation(g.sites, modulation_vector(g, z));
}

struct GeneratorGrads {
    GeneratorParams d_params;
    Tensor d_z;
};

inline GeneratorGrads generator_backward(const GeneratorParams& g, const Tensor& z, const std::vector<FilmSite>& d_sites) {
    if (d_sites.size() != g.sites.size()) throw ShapeError("generator_backward: site count mismatch");
    GeneratorGrads out{zeros_like_params(g), Tensor({z.size()})};
    const Tensor d_tau = join_modulation(d_sites);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < g.maps.size(); ++i) {
        const std::size_t n = g.maps[i].out();
        std::span<const double> dt(d_tau.data() + pos, n);
        outer_acc(dt, z.values(), out.d_params.maps[i].weight);
        for (std::size_t j = 0; j < n; ++j) out.d_params.maps[i].bias[j] += dt[j];
        gemv_t_acc(g.maps[i].weight, dt, out.d_z.values());
        pos += n;
    }
    return out;
}

}  // namespace tamrl
