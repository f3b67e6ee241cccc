#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dce {

/// Empirical quantile with linear interpolation between order statistics
/// (the convention used by most statistics packages). `sorted` must be
/// ascending and nonempty, q in [0, 1].
inline double quantile_sorted(const std::vector<double>& sorted, double q)
{
    if (sorted.empty())
        throw std::invalid_argument("quantile of empty sample");
    if (q < 0.0 || q > 1.0)
        throw std::domain_error("quantile level outside [0,1]");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size())
        return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> sample, double q)
{
    std::sort(sample.begin(), sample.end());
    return quantile_sorted(sample, q);
}

inline double median(std::vector<double> sample)
{
    return quantile(std::move(sample), 0.5);
}

inline double mean(const std::vector<double>& sample)
{
    if (sample.empty())
        throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double v : sample)
        s += v;
    return s / static_cast<double>(sample.size());
}

/// Sample standard deviation (n-1 denominator); 0 for a single value.
inline double sample_sd(const std::vector<double>& sample)
{
    if (sample.empty())
        throw std::invalid_argument("sd of empty sample");
    if (sample.size() == 1)
        return 0.0;
    const double m = mean(sample);
    double ss = 0.0;
    for (double v : sample)
        ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(sample.size() - 1));
}

/// Pearson correlation. When either side has zero variance the value is
/// undefined; by convention we report 1.0 if the two series agree to
/// within 1e-12 everywhere and 0.0 otherwise.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("pearson: size mismatch or empty");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        double maxdiff = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            maxdiff = std::max(maxdiff, std::abs(x[i] - y[i]));
        return maxdiff <= 1e-12 ? 1.0 : 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-voxel chain seed: FNV-1a hash of the voxel id mixed into the base
/// seed. Stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t base, const std::string& voxel_id)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : voxel_id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(base ^ h);
}

/// Runs fn(0..n-1) on up to `workers` threads. Results must be written to
/// pre-sized slots indexed by the job id, which keeps reductions
/// deterministic. The first exception thrown by any job is rethrown.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn)
{
    if (n == 0)
        return;
    const int nthreads = std::min<std::size_t>(std::max(workers, 1), n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int w = 0; w < nthreads; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load())
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error)
                        first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace dce
