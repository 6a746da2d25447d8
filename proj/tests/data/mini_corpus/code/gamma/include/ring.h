#ifndef RING_H
#define RING_H

#include <stddef.h>

struct ring {
  unsigned char *data;
  size_t cap;
  size_t head;
  size_t len;
};

int ring_init(struct ring *r, size_t cap);
int ring_push(struct ring *r, unsigned char byte);
int ring_pop(struct ring *r, unsigned char *out);
void ring_free(struct ring *r);

#endif
