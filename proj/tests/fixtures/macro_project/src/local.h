#ifndef LOCAL_H
#define LOCAL_H

#define BUF_LIMIT 64
#define STATE_READY 3

#endif
