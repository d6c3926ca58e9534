#include <cstdio>

int main() {
  std::puts("cfkit: placeholder");
  return 0;
}
