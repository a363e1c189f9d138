"""Classic kata module for the toy corpus."""


def fizzbuzz(n):
    """Return the fizzbuzz word for n."""
    if n % 3 == 0:
        return "Fizz"
    if n % 5 == 0:
        return "Buzz"
    if n % 15 == 0:
        return "FizzBuzz"
    return str(n)
