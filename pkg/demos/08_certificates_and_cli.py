# Certificates round-trip through JSON and are rechecked from scratch by the CLI.
import tempfile
from pathlib import Path

from intsos.certify import Certificate
from intsos.cli import main

here = Path(__file__).resolve().parent
problem = str(here / "problems" / "transport.prob")

with tempfile.TemporaryDirectory() as tmp:
    cert = Path(tmp) / "transport.json"
    print("stability exit code:", main(["stability", problem, "--out", str(cert)]))
    print("check exit code:    ", main(["check", str(cert), problem]))

    # Tampering with a Gram matrix breaks the certificate.
    c = Certificate.load(cert)
    c.constraints[1].gram_main[0, 0] -= 1.0
    c.save(cert)
    print("after tampering:    ", main(["check", str(cert), problem]))

    # A plain integral inequality: int u_x^2 >= 4 int u^2 under Dirichlet ends.
    print("verify exit code:   ", main(["verify", str(here / "problems" / "wirtinger.prob")]))
