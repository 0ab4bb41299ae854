#!/usr/bin/env python3
"""Talk to a model server over the generation wire protocol.

Starts a servegen instance (stub backend) in this process, then uses the
client exactly as the generate stage would with --endpoint. Point the same
client at a server wrapping a real fine-tuned code model and nothing else
changes: that is the whole contract between the workbench and real LLMs.

Requires the servegen package: pip install -e ./servegen
"""

import threading

from flseq import add_line_numbers, remote_generate, remote_info
from servegen import ServerConfig, make_server

SOURCE = """\
def clamp(value, low, high):
    if value < low:
        return low
    if value > high:
        return low
    return value"""


def main() -> None:
    httpd = make_server(ServerConfig(model_id="stub", port=0))
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    host, port = httpd.server_address
    endpoint = f"http://{host}:{port}"
    try:
        info = remote_info(endpoint)
        print(f"server: {info['name']} (context {info['context_length']}) at {endpoint}\n")

        numbered = add_line_numbers(SOURCE)
        print("== request input ==")
        print(numbered)

        candidates = remote_generate(endpoint, numbered, num_candidates=4,
                                     max_new_tokens=64, request_id="demo")
        print("\n== ranked candidates from the server ==")
        for rank, cand in enumerate(candidates, start=1):
            print(f"  #{rank} log_prob={cand.log_prob:7.3f}  line={cand.line_number}  {cand.raw_text!r}")
        print("\n(the fault is on line 5: 'return low' should be 'return high')")
    finally:
        httpd.shutdown()
        httpd.server_close()


if __name__ == "__main__":
    main()
