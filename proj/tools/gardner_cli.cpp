#include <iostream>

#include "gardner/io.hpp"

int main(int argc, char** argv) {
    try {
        const auto cfg = gardner::io::parse_config(argc, argv);
        return gardner::io::run(cfg, std::cerr);
    } catch (const gardner::io::UsageError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
}
