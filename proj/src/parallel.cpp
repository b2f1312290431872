#include "nss/parallel.hpp"

#include <algorithm>
#include <exception>

namespace nss {

namespace {

std::atomic<unsigned> g_workers{0};

// Lazily started pool, driven from the main thread only (parallel_chunks is
// not reentrant). A job is a counter over chunk indices that every thread,
// including the caller, drains with fetch_add.
class Pool {
public:
    static Pool& instance() {
        // Intentionally leaked: workers park on the condition variable at
        // process exit, so the pool must outlive static destruction.
        static Pool* pool = new Pool();
        return *pool;
    }

    void run(size_t n_chunks, const std::function<void(size_t)>& body, unsigned workers) {
        if (n_chunks == 0) return;
        {
            std::lock_guard<std::mutex> lock(mu_);
            unsigned want = std::min<size_t>(workers - 1, n_chunks - 1);
            while (threads_.size() < want) {
                threads_.emplace_back([this] { worker_loop(); });
                threads_.back().detach();
            }
            body_ = &body;
            next_chunk_.store(0, std::memory_order_relaxed);
            total_chunks_ = n_chunks;
            pending_ = static_cast<unsigned>(threads_.size());
            ++generation_;
        }
        cv_.notify_all();

        drain();

        std::unique_lock<std::mutex> lock(mu_);
        done_cv_.wait(lock, [&] { return pending_ == 0; });
        body_ = nullptr;
        if (error_) {
            auto e = error_;
            error_ = nullptr;
            std::rethrow_exception(e);
        }
    }

private:
    Pool() = default;

    void worker_loop() {
        uint64_t seen = 0;
        while (true) {
            std::unique_lock<std::mutex> lock(mu_);
            cv_.wait(lock, [&] { return generation_ != seen; });
            seen = generation_;
            lock.unlock();

            drain();

            lock.lock();
            if (--pending_ == 0) done_cv_.notify_all();
        }
    }

    void drain() {
        const auto* body = body_;
        size_t total = total_chunks_;
        while (true) {
            size_t c = next_chunk_.fetch_add(1, std::memory_order_relaxed);
            if (c >= total) break;
            try {
                (*body)(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu_);
                if (!error_) error_ = std::current_exception();
            }
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> threads_;
    const std::function<void(size_t)>* body_ = nullptr;
    std::atomic<size_t> next_chunk_{0};
    size_t total_chunks_ = 0;
    unsigned pending_ = 0;
    uint64_t generation_ = 0;
    std::exception_ptr error_;
};

}  // namespace

void set_worker_count(unsigned n) { g_workers.store(n); }

unsigned worker_count() {
    unsigned n = g_workers.load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_chunks(size_t begin, size_t end, size_t chunk_size,
                     const std::function<void(size_t, size_t, size_t)>& fn) {
    if (end <= begin) return;
    if (chunk_size == 0) chunk_size = 1;
    size_t n = end - begin;
    size_t chunks = chunk_count(n, chunk_size);
    unsigned workers = worker_count();

    auto body = [&](size_t c) {
        size_t lo = begin + c * chunk_size;
        size_t hi = std::min(end, lo + chunk_size);
        fn(lo, hi, c);
    };

    if (workers <= 1 || chunks <= 1) {
        for (size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::function<void(size_t)> f = body;
    Pool::instance().run(chunks, f, workers);
}

}  // namespace nss
