#include <cstdio>

int main() {
  std::puts("lodgepp cli placeholder");
  return 0;
}
