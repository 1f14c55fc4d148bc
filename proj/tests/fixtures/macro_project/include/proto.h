#ifndef PROTO_H
#define PROTO_H

#define TLS1_2_VERSION 0x0303
#define TLS1_1_VERSION 0x0302
#define BUF_LIMIT 128
#define ALIGN_UP(x, a) (((x) + (a) - 1) & ~((a) - 1))
#define COMPLEX_HELPER(x) do { trace(x); } while (0)

int proto_handshake(void *session);

#endif
