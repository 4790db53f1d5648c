#include "rfimp/kernels.hpp"

#include <cmath>
#include <vector>

namespace rfimp::kernels {

namespace serial {

template <typename T>
void dense_forward(std::span<const T> x, std::size_t batch, std::size_t fan_in,
                   std::span<const T> w, std::span<const T> b, std::size_t fan_out, std::span<T> y,
                   bool relu) {
    for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t o = 0; o < fan_out; ++o) {
            double acc = static_cast<double>(b[o]);
            for (std::size_t i = 0; i < fan_in; ++i)
                acc += static_cast<double>(x[r * fan_in + i]) * static_cast<double>(w[o * fan_in + i]);
            if (relu && acc < 0.0) acc = 0.0;
            y[r * fan_out + o] = static_cast<T>(acc);
        }
    }
}

template <typename T>
void dense_backward_params(std::span<const T> x, std::size_t batch, std::size_t fan_in,
                           std::span<const T> dz, std::size_t fan_out, std::span<T> dw,
                           std::span<T> db) {
    for (std::size_t o = 0; o < fan_out; ++o) {
        double bacc = 0.0;
        for (std::size_t r = 0; r < batch; ++r) bacc += static_cast<double>(dz[r * fan_out + o]);
        db[o] = static_cast<T>(bacc);
        for (std::size_t i = 0; i < fan_in; ++i) {
            double acc = 0.0;
            for (std::size_t r = 0; r < batch; ++r)
                acc += static_cast<double>(dz[r * fan_out + o]) * static_cast<double>(x[r * fan_in + i]);
            dw[o * fan_in + i] = static_cast<T>(acc);
        }
    }
}

template <typename T>
void dense_backward_input(std::span<const T> dz, std::size_t batch, std::size_t fan_out,
                          std::span<const T> w, std::size_t fan_in, std::span<T> dx) {
    for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t i = 0; i < fan_in; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < fan_out; ++o)
                acc += static_cast<double>(dz[r * fan_out + o]) * static_cast<double>(w[o * fan_in + i]);
            dx[r * fan_in + i] = static_cast<T>(acc);
        }
    }
}

template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
                 const AdamCoefficients& c) {
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(c.step));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(c.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = static_cast<double>(grads[k]);
        const double mk = c.beta1 * static_cast<double>(m[k]) + (1.0 - c.beta1) * g;
        const double vk = c.beta2 * static_cast<double>(v[k]) + (1.0 - c.beta2) * g * g;
        m[k] = static_cast<T>(mk);
        v[k] = static_cast<T>(vk);
        const double m_hat = mk / bias1;
        const double v_hat = vk / bias2;
        params[k] = static_cast<T>(static_cast<double>(params[k]) -
                                   c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
}

}  // namespace serial

namespace parallel {

namespace {

// Four weight rows against one input row.
template <typename T>
inline void dot4(const T* __restrict x, const T* __restrict w0, const T* __restrict w1,
                 const T* __restrict w2, const T* __restrict w3, std::size_t n, double out[4]) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
#pragma omp simd reduction(+ : a0, a1, a2, a3)
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = static_cast<double>(x[i]);
        a0 += xi * static_cast<double>(w0[i]);
        a1 += xi * static_cast<double>(w1[i]);
        a2 += xi * static_cast<double>(w2[i]);
        a3 += xi * static_cast<double>(w3[i]);
    }
    out[0] = a0;
    out[1] = a1;
    out[2] = a2;
    out[3] = a3;
}

template <typename T>
inline double dot1(const T* __restrict x, const T* __restrict w, std::size_t n) {
    double a = 0.0;
#pragma omp simd reduction(+ : a)
    for (std::size_t i = 0; i < n; ++i) a += static_cast<double>(x[i]) * static_cast<double>(w[i]);
    return a;
}

}  // namespace

template <typename T>
void dense_forward(std::span<const T> x, std::size_t batch, std::size_t fan_in,
                   std::span<const T> w, std::span<const T> b, std::size_t fan_out, std::span<T> y,
                   bool relu) {
    const auto blocks = static_cast<std::ptrdiff_t>((fan_out + 3) / 4);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
        const std::size_t o0 = static_cast<std::size_t>(blk) * 4;
        if (o0 + 4 <= fan_out) {
            const T* w0 = w.data() + o0 * fan_in;
            for (std::size_t r = 0; r < batch; ++r) {
                double acc[4];
                dot4(x.data() + r * fan_in, w0, w0 + fan_in, w0 + 2 * fan_in, w0 + 3 * fan_in, fan_in, acc);
                for (std::size_t j = 0; j < 4; ++j) {
                    double v = acc[j] + static_cast<double>(b[o0 + j]);
                    if (relu && v < 0.0) v = 0.0;
                    y[r * fan_out + o0 + j] = static_cast<T>(v);
                }
            }
        } else {
            for (std::size_t o = o0; o < fan_out; ++o) {
                for (std::size_t r = 0; r < batch; ++r) {
                    double v = dot1(x.data() + r * fan_in, w.data() + o * fan_in, fan_in) +
                               static_cast<double>(b[o]);
                    if (relu && v < 0.0) v = 0.0;
                    y[r * fan_out + o] = static_cast<T>(v);
                }
            }
        }
    }
}

template <typename T>
void dense_backward_params(std::span<const T> x, std::size_t batch, std::size_t fan_in,
                           std::span<const T> dz, std::size_t fan_out, std::span<T> dw,
                           std::span<T> db) {
#pragma omp parallel
    {
        std::vector<double> acc(fan_in);
#pragma omp for schedule(static)
        for (std::ptrdiff_t oi = 0; oi < static_cast<std::ptrdiff_t>(fan_out); ++oi) {
            const auto o = static_cast<std::size_t>(oi);
            double bacc = 0.0;
            bool any = false;
            for (std::size_t r = 0; r < batch; ++r) {
                const double d = static_cast<double>(dz[r * fan_out + o]);
                bacc += d;
                any = any || d != 0.0;
            }
            db[o] = static_cast<T>(bacc);
            T* __restrict row = dw.data() + o * fan_in;
            if (!any) {
                for (std::size_t i = 0; i < fan_in; ++i) row[i] = T(0);
                continue;
            }
            double* __restrict a = acc.data();
            for (std::size_t i = 0; i < fan_in; ++i) a[i] = 0.0;
            for (std::size_t r = 0; r < batch; ++r) {
                const double d = static_cast<double>(dz[r * fan_out + o]);
                if (d == 0.0) continue;
                const T* __restrict xr = x.data() + r * fan_in;
#pragma omp simd
                for (std::size_t i = 0; i < fan_in; ++i) a[i] += d * static_cast<double>(xr[i]);
            }
#pragma omp simd
            for (std::size_t i = 0; i < fan_in; ++i) row[i] = static_cast<T>(a[i]);
        }
    }
}

template <typename T>
void dense_backward_input(std::span<const T> dz, std::size_t batch, std::size_t fan_out,
                          std::span<const T> w, std::size_t fan_in, std::span<T> dx) {
#pragma omp parallel
    {
        std::vector<double> acc(fan_in);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ri = 0; ri < static_cast<std::ptrdiff_t>(batch); ++ri) {
            const auto r = static_cast<std::size_t>(ri);
            double* __restrict a = acc.data();
            for (std::size_t i = 0; i < fan_in; ++i) a[i] = 0.0;
            for (std::size_t o = 0; o < fan_out; ++o) {
                const double d = static_cast<double>(dz[r * fan_out + o]);
                if (d == 0.0) continue;
                const T* __restrict wr = w.data() + o * fan_in;
#pragma omp simd
                for (std::size_t i = 0; i < fan_in; ++i) a[i] += d * static_cast<double>(wr[i]);
            }
            for (std::size_t i = 0; i < fan_in; ++i) dx[r * fan_in + i] = static_cast<T>(a[i]);
        }
    }
}

template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
                 const AdamCoefficients& c) {
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(c.step));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(c.step));
    const double b1 = c.beta1, b2 = c.beta2, lr = c.lr, eps = c.epsilon;
    const auto n = static_cast<std::ptrdiff_t>(params.size());
    T* __restrict p = params.data();
    const T* __restrict g = grads.data();
    T* __restrict mp = m.data();
    T* __restrict vp = v.data();
#pragma omp parallel for simd schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const double gk = static_cast<double>(g[k]);
        const double mk = b1 * static_cast<double>(mp[k]) + (1.0 - b1) * gk;
        const double vk = b2 * static_cast<double>(vp[k]) + (1.0 - b2) * gk * gk;
        mp[k] = static_cast<T>(mk);
        vp[k] = static_cast<T>(vk);
        p[k] = static_cast<T>(static_cast<double>(p[k]) -
                              lr * (mk / bias1) / (std::sqrt(vk / bias2) + eps));
    }
}

}  // namespace parallel

#define RFIMP_INSTANTIATE(NS, T)                                                                  \
    template void NS::dense_forward<T>(std::span<const T>, std::size_t, std::size_t,              \
                                       std::span<const T>, std::span<const T>, std::size_t,       \
                                       std::span<T>, bool);                                       \
    template void NS::dense_backward_params<T>(std::span<const T>, std::size_t, std::size_t,      \
                                               std::span<const T>, std::size_t, std::span<T>,     \
                                               std::span<T>);                                     \
    template void NS::dense_backward_input<T>(std::span<const T>, std::size_t, std::size_t,       \
                                              std::span<const T>, std::size_t, std::span<T>);     \
    template void NS::adam_update<T>(std::span<T>, std::span<const T>, std::span<T>,              \
                                     std::span<T>, const AdamCoefficients&);

RFIMP_INSTANTIATE(serial, float)
RFIMP_INSTANTIATE(serial, double)
RFIMP_INSTANTIATE(parallel, float)
RFIMP_INSTANTIATE(parallel, double)

#undef RFIMP_INSTANTIATE

}  // namespace rfimp::kernels
