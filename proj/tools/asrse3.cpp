#include <cstdio>

int main() {
    std::puts("asrse3: placeholder");
    return 0;
}
