// Serves the external scorer protocol on stdin/stdout from an n-gram model file:
//   longdep-ngram-scorer MODEL.json
#include <iostream>
#include <memory>
#include <string>

#include "longdep/errors.hpp"
#include "longdep/external.hpp"
#include "longdep/ngram.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: longdep-ngram-scorer MODEL.json\n";
        return 2;
    }
    try {
        auto model = std::make_shared<const longdep::NGramModel>(longdep::NGramModel::load(argv[1]));
        longdep::NGramProtocolHandler handler(model);
        std::string line;
        while (std::getline(std::cin, line)) {
            if (line.empty()) continue;
            std::cout << handler.handle(line) << '\n' << std::flush;
        }
    } catch (const std::exception& e) {
        std::cerr << "longdep-ngram-scorer: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
