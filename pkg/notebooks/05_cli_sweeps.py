# %% [markdown]
# Driving the command-line sweeps from Python and reading the CSV back.

# %%
import csv
import io
from contextlib import redirect_stdout

from sgfnoma.cli import main


def run(*args):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(list(args))
    return code, list(csv.DictReader(io.StringIO(buf.getvalue())))


# %%
# ps = p0/10, as in the first comparison setup
code, rows = run("sweep", "--p0-policy", "ratio:10", "--ps-sweep", "0:40:10",
                 "--m-users", "1,5", "--trials", "200000")
for r in rows:
    print(r["ps_db"], r["m_users"], r["scheme"], r["metric"], r["value"])

# %%
code, rows = run("validate", "--ps-sweep", "0:40:10", "--m-users", "1,2,3", "--trials", "200000")
print("exit", code)
for r in rows:
    print(r["ps_db"], r["m_users"], r["exact"], r["mc"], r["verdict"])

# %%
code, rows = run("sweep", "--r0", "1.5", "--rs", "1", "--ps-db", "30,40", "--m-users", "5",
                 "--trials", "200000")
print({r["metric"]: r["value"] for r in rows if r["scheme"] == "proposed"})
