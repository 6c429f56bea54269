// Drives two networks on identical data, one exchanging full estimates and
// one exchanging a single sign bit per link, and prints their MSD.

#include <cstdio>
#include <vector>

#include "compdiff/compdiff.hpp"

using namespace compdiff;

int main() {
    const auto topology = seven_node_topology();
    const auto weights = build_metropolis_weights(topology, 0.1);
    const std::size_t m = 6;

    DataModel model;
    model.target = Vector::LinSpaced(static_cast<Eigen::Index>(m), -1.0, 1.0);
    model.regressor_variance = 0.1;
    model.noise_variances.assign(topology.node_count(), 0.01);

    DiffusionNetwork full(topology, weights, Strategy::full_atc(0.3), m, 7);
    DiffusionNetwork one_bit(topology, weights, Strategy::single_bit_sign_lms(0.3, 0.01, 0.1), m, 7);

    std::vector<Engine> streams;
    for (std::size_t i = 0; i < topology.node_count(); ++i) streams.emplace_back(derive_seed(42, {i}));

    std::uint64_t full_bits = 0, one_bit_bits = 0;
    std::vector<Observation> obs(topology.node_count());
    for (int t = 1; t <= 5000; ++t) {
        for (std::size_t i = 0; i < obs.size(); ++i) obs[i] = generate_observation(model, i, streams[i]);
        full_bits += full.step(obs);
        one_bit_bits += one_bit.step(obs);
        if (t % 500 == 0) {
            std::printf("t=%5d  full %7.2f dB  single-bit %7.2f dB\n", t, to_db(full.network_msd(model.target)),
                        to_db(one_bit.network_msd(model.target)));
        }
    }
    std::printf("bits exchanged: full %llu, single-bit %llu\n", static_cast<unsigned long long>(full_bits),
                static_cast<unsigned long long>(one_bit_bits));
}
