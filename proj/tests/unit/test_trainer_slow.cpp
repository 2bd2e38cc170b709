#include <doctest.h>

#include "stepgan/trainer.hpp"

using namespace stepgan;

// Default layer widths on 2-D ring data with default optimiser settings.
// Stops each seed at the first epoch in which generators stepped.
TEST_CASE("8-mode ring: the gate opens within three epochs") {
    Architecture a;
    a.data_dim = 2;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CAPTURE(seed);
        const SynthData synth = synth_make({.n_normal = 2000, .seed = seed});
        const TrainView data(synth.normal.features);
        GanModel m(5, a, seed);
        TrainConfig c;
        c.n_generators = 5;
        c.seed = seed;
        Trainer t(m, c);
        std::size_t first_open = 0;
        for (std::size_t epoch = 1; epoch <= 3 && first_open == 0; ++epoch) {
            if (t.train_epoch(data).gen_steps > 0) first_open = epoch;
        }
        CHECK(first_open >= 1);
        CHECK(first_open <= 3);
    }
}
