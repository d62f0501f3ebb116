#pragma once

#include <cstdint>
#include <vector>

namespace codlab {

// Deterministic splitmix64 generator. Used everywhere instead of the
// standard distributions so that identical seeds give identical streams on
// every platform and standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    bool coin() { return (next_u64() & 1ULL) != 0; }

    // Independent child stream; mixing constant keeps siblings decorrelated.
    Rng fork(uint64_t stream) const {
        return Rng(state_ ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

} // namespace codlab
