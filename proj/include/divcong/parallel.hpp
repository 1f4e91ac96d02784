#pragma once

// Exceptions may not escape an OpenMP region; the first one is kept and
// rethrown after the loop.

#include <exception>
#include <mutex>

namespace divcong {

class FirstError {
public:
    template <class Fn>
    void run(Fn&& fn) noexcept {
        try {
            fn();
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
        }
    }

    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

}  // namespace divcong
