#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

// Row-range compute kernels for the sequential network. Everything is
// templated on the scalar type: float in production, double in gradient
// verification. A "row" is one batch element; callers drive parallelism by
// splitting row ranges and kernels never touch rows outside [0, rows).

namespace nss::detail {

struct Conv2dDims {
    int in_c, in_h, in_w;
    int out_c, out_h, out_w;
    int kh, kw, stride, pad;
    size_t in_size() const { return static_cast<size_t>(in_c) * in_h * in_w; }
    size_t out_size() const { return static_cast<size_t>(out_c) * out_h * out_w; }
};

struct Pool2dDims {
    int c, in_h, in_w;
    int out_h, out_w;
    int ph, pw, stride;
    size_t in_size() const { return static_cast<size_t>(c) * in_h * in_w; }
    size_t out_size() const { return static_cast<size_t>(c) * out_h * out_w; }
};

template <typename T>
void dense_forward(const T* x, const T* w, const T* b, T* y, size_t rows, int in, int out) {
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * in;
        T* yr = y + r * out;
        for (int o = 0; o < out; ++o) {
            const T* wo = w + static_cast<size_t>(o) * in;
            T acc = b[o];
            for (int i = 0; i < in; ++i) acc += wo[i] * xr[i];
            yr[o] = acc;
        }
    }
}

// dx[r,i] = sum_o dy[r,o] * w[o,i]
template <typename T>
void dense_backward_input(const T* dy, const T* w, T* dx, size_t rows, int in, int out) {
    for (size_t r = 0; r < rows; ++r) {
        const T* dyr = dy + r * out;
        T* dxr = dx + r * in;
        std::fill(dxr, dxr + in, T(0));
        for (int o = 0; o < out; ++o) {
            const T* wo = w + static_cast<size_t>(o) * in;
            T g = dyr[o];
            for (int i = 0; i < in; ++i) dxr[i] += g * wo[i];
        }
    }
}

// Accumulates into dw/db; caller zeroes them and owns reduction order.
template <typename T>
void dense_grad_params(const T* x, const T* dy, T* dw, T* db, size_t rows, int in, int out) {
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * in;
        const T* dyr = dy + r * out;
        for (int o = 0; o < out; ++o) {
            T g = dyr[o];
            db[o] += g;
            T* dwo = dw + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) dwo[i] += g * xr[i];
        }
    }
}

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* y, size_t rows, const Conv2dDims& d) {
    const size_t in_plane = static_cast<size_t>(d.in_h) * d.in_w;
    const size_t k_plane = static_cast<size_t>(d.kh) * d.kw;
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * d.in_size();
        T* yr = y + r * d.out_size();
        for (int oc = 0; oc < d.out_c; ++oc) {
            const T* woc = w + static_cast<size_t>(oc) * d.in_c * k_plane;
            T* yoc = yr + static_cast<size_t>(oc) * d.out_h * d.out_w;
            for (int oy = 0; oy < d.out_h; ++oy) {
                for (int ox = 0; ox < d.out_w; ++ox) {
                    T acc = b[oc];
                    int iy0 = oy * d.stride - d.pad;
                    int ix0 = ox * d.stride - d.pad;
                    for (int ic = 0; ic < d.in_c; ++ic) {
                        const T* xic = xr + ic * in_plane;
                        const T* wic = woc + ic * k_plane;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            int iy = iy0 + ky;
                            if (iy < 0 || iy >= d.in_h) continue;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                int ix = ix0 + kx;
                                if (ix < 0 || ix >= d.in_w) continue;
                                acc += wic[ky * d.kw + kx] * xic[iy * d.in_w + ix];
                            }
                        }
                    }
                    yoc[oy * d.out_w + ox] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* dy, const T* w, T* dx, size_t rows, const Conv2dDims& d) {
    const size_t in_plane = static_cast<size_t>(d.in_h) * d.in_w;
    const size_t k_plane = static_cast<size_t>(d.kh) * d.kw;
    for (size_t r = 0; r < rows; ++r) {
        const T* dyr = dy + r * d.out_size();
        T* dxr = dx + r * d.in_size();
        std::fill(dxr, dxr + d.in_size(), T(0));
        for (int oc = 0; oc < d.out_c; ++oc) {
            const T* woc = w + static_cast<size_t>(oc) * d.in_c * k_plane;
            const T* dyoc = dyr + static_cast<size_t>(oc) * d.out_h * d.out_w;
            for (int oy = 0; oy < d.out_h; ++oy) {
                for (int ox = 0; ox < d.out_w; ++ox) {
                    T g = dyoc[oy * d.out_w + ox];
                    if (g == T(0)) continue;
                    int iy0 = oy * d.stride - d.pad;
                    int ix0 = ox * d.stride - d.pad;
                    for (int ic = 0; ic < d.in_c; ++ic) {
                        T* dxic = dxr + ic * in_plane;
                        const T* wic = woc + ic * k_plane;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            int iy = iy0 + ky;
                            if (iy < 0 || iy >= d.in_h) continue;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                int ix = ix0 + kx;
                                if (ix < 0 || ix >= d.in_w) continue;
                                dxic[iy * d.in_w + ix] += g * wic[ky * d.kw + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_grad_params(const T* x, const T* dy, T* dw, T* db, size_t rows, const Conv2dDims& d) {
    const size_t in_plane = static_cast<size_t>(d.in_h) * d.in_w;
    const size_t k_plane = static_cast<size_t>(d.kh) * d.kw;
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * d.in_size();
        const T* dyr = dy + r * d.out_size();
        for (int oc = 0; oc < d.out_c; ++oc) {
            T* dwoc = dw + static_cast<size_t>(oc) * d.in_c * k_plane;
            const T* dyoc = dyr + static_cast<size_t>(oc) * d.out_h * d.out_w;
            for (int oy = 0; oy < d.out_h; ++oy) {
                for (int ox = 0; ox < d.out_w; ++ox) {
                    T g = dyoc[oy * d.out_w + ox];
                    if (g == T(0)) continue;
                    db[oc] += g;
                    int iy0 = oy * d.stride - d.pad;
                    int ix0 = ox * d.stride - d.pad;
                    for (int ic = 0; ic < d.in_c; ++ic) {
                        const T* xic = xr + ic * in_plane;
                        T* dwic = dwoc + ic * k_plane;
                        for (int ky = 0; ky < d.kh; ++ky) {
                            int iy = iy0 + ky;
                            if (iy < 0 || iy >= d.in_h) continue;
                            for (int kx = 0; kx < d.kw; ++kx) {
                                int ix = ix0 + kx;
                                if (ix < 0 || ix >= d.in_w) continue;
                                dwic[ky * d.kw + kx] += g * xic[iy * d.in_w + ix];
                            }
                        }
                    }
                }
            }
        }
    }
}

// argmax may be null when the caller does not need backward information.
template <typename T>
void maxpool2d_forward(const T* x, T* y, int32_t* argmax, size_t rows, const Pool2dDims& d) {
    const size_t in_plane = static_cast<size_t>(d.in_h) * d.in_w;
    const size_t out_plane = static_cast<size_t>(d.out_h) * d.out_w;
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * d.in_size();
        T* yr = y + r * d.out_size();
        int32_t* ar = argmax ? argmax + r * d.out_size() : nullptr;
        for (int c = 0; c < d.c; ++c) {
            const T* xc = xr + c * in_plane;
            T* yc = yr + c * out_plane;
            for (int oy = 0; oy < d.out_h; ++oy) {
                for (int ox = 0; ox < d.out_w; ++ox) {
                    int iy0 = oy * d.stride;
                    int ix0 = ox * d.stride;
                    T best = xc[iy0 * d.in_w + ix0];
                    int best_idx = iy0 * d.in_w + ix0;
                    for (int py = 0; py < d.ph; ++py) {
                        for (int px = 0; px < d.pw; ++px) {
                            int idx = (iy0 + py) * d.in_w + (ix0 + px);
                            if (xc[idx] > best) {
                                best = xc[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    yc[oy * d.out_w + ox] = best;
                    if (ar) ar[c * out_plane + oy * d.out_w + ox] = best_idx;
                }
            }
        }
    }
}

template <typename T>
void maxpool2d_backward(const T* dy, const int32_t* argmax, T* dx, size_t rows,
                        const Pool2dDims& d) {
    const size_t in_plane = static_cast<size_t>(d.in_h) * d.in_w;
    const size_t out_plane = static_cast<size_t>(d.out_h) * d.out_w;
    for (size_t r = 0; r < rows; ++r) {
        const T* dyr = dy + r * d.out_size();
        const int32_t* ar = argmax + r * d.out_size();
        T* dxr = dx + r * d.in_size();
        std::fill(dxr, dxr + d.in_size(), T(0));
        for (int c = 0; c < d.c; ++c) {
            const T* dyc = dyr + c * out_plane;
            const int32_t* ac = ar + c * out_plane;
            T* dxc = dxr + c * in_plane;
            for (size_t i = 0; i < out_plane; ++i) dxc[ac[i]] += dyc[i];
        }
    }
}

template <typename T>
void relu_forward(const T* x, T* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* dy, const T* y, T* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
}

template <typename T>
void tanh_forward(const T* x, T* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

template <typename T>
void tanh_backward(const T* dy, const T* y, T* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = dy[i] * (T(1) - y[i] * y[i]);
}

template <typename T>
void sigmoid_forward(const T* x, T* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void sigmoid_backward(const T* dy, const T* y, T* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] = dy[i] * y[i] * (T(1) - y[i]);
}

// Numerically safe row softmax (max subtraction).
template <typename T>
void softmax_forward(const T* x, T* y, size_t rows, int classes) {
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * classes;
        T* yr = y + r * classes;
        T m = xr[0];
        for (int c = 1; c < classes; ++c) m = std::max(m, xr[c]);
        T sum = T(0);
        for (int c = 0; c < classes; ++c) {
            yr[c] = std::exp(xr[c] - m);
            sum += yr[c];
        }
        for (int c = 0; c < classes; ++c) yr[c] /= sum;
    }
}

}  // namespace nss::detail
